use crate::error::{Error, Result};
use crate::fields::{DirectorField, Grid, ScalarField, Snapshot, Vec3, VectorField};

/// The evolved tuple `(t, ρ, u, p, d)`. `p` is the effective pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub rho: ScalarField,
    pub u: VectorField,
    pub p: ScalarField,
    pub d: DirectorField,
}

impl FlowState {
    pub fn new(t: f64, rho: ScalarField, u: VectorField, p: ScalarField, d: DirectorField) -> Result<Self> {
        let g = rho.grid;
        g.check_same(&u.grid, "u")?;
        g.check_same(&p.grid, "p")?;
        g.check_same(&d.grid, "d")?;
        Ok(Self { t, rho, u, p, d })
    }

    pub fn grid(&self) -> &Grid {
        &self.rho.grid
    }

    /// Finite entries, `ρ ≥ 0`, zero wall velocities.
    pub fn validate(&self) -> Result<()> {
        self.rho.ensure_finite("rho")?;
        self.u.ensure_finite("u")?;
        self.p.ensure_finite("p")?;
        self.d.ensure_finite("d")?;
        if let Some((index, &value)) = self.rho.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeWeight { index, value });
        }
        if self.u.max_wall_value() != 0.0 {
            return Err(Error::Precondition("no-slip: wall velocity must be exactly 0".into()));
        }
        Ok(())
    }

    pub fn to_snapshot(&self) -> Snapshot {
        let g = self.grid();
        let mut fields = vec![("rho".to_string(), self.rho.values.clone())];
        for (a, c) in self.u.comps.iter().enumerate() {
            fields.push((format!("u{a}"), c.clone()));
        }
        fields.push(("p".to_string(), self.p.values.clone()));
        for k in 0..3 {
            fields.push((format!("d{k}"), self.d.values.iter().map(|v| v[k]).collect()));
        }
        fields.push(("d_star".to_string(), self.d.boundary.to_vec()));
        Snapshot::new(g, self.t, fields)
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Self> {
        let g = s.grid()?;
        let get = |name: &str| -> Result<Vec<f64>> {
            s.field(name)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::Snapshot(format!("missing field `{name}`")))
        };
        let rho = ScalarField::from_values(&g, get("rho")?)?;
        let comps = (0..g.dim()).map(|a| get(&format!("u{a}"))).collect::<Result<Vec<_>>>()?;
        let u = VectorField::from_components(&g, comps)?;
        let p = ScalarField::from_values(&g, get("p")?)?;
        let dk: Vec<Vec<f64>> = (0..3).map(|k| get(&format!("d{k}"))).collect::<Result<_>>()?;
        let values: Vec<Vec3> = (0..g.num_cells()).map(|i| [dk[0][i], dk[1][i], dk[2][i]]).collect();
        let ds = get("d_star")?;
        if ds.len() != 3 {
            return Err(Error::Snapshot("d_star must have 3 entries".into()));
        }
        let d = DirectorField::from_values(&g, values, [ds[0], ds[1], ds[2]])?;
        Self::new(s.header.time, rho, u, p, d)
    }
}
