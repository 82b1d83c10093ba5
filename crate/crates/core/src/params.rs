//! Named parameter vectors with natural- and estimation-scale views.
//!
//! Parameters live on their natural scale (rates, probabilities, counts).
//! Optimization and random-walk perturbation act on the estimation scale,
//! where constrained parameters are transformed so that any real value maps
//! back into the valid domain. Names are resolved to dense indices once, at
//! model build time.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Transform linking a parameter's natural scale to its estimation scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamScale {
    /// Unconstrained: identity.
    Identity,
    /// Positive: natural log.
    Log,
    /// Unit interval (0, 1): logit.
    Logit,
    /// Bounded interval (lo, hi): logit of the rescaled value.
    LogitRange { lo: f64, hi: f64 },
}

impl ParamScale {
    /// Natural -> estimation scale. Fails if the value sits on (or outside)
    /// the domain boundary, where the transform is not finite.
    pub fn to_estimation(&self, name: &str, x: f64) -> Result<f64> {
        let z = match *self {
            ParamScale::Identity => x,
            ParamScale::Log => x.ln(),
            ParamScale::Logit => (x / (1.0 - x)).ln(),
            ParamScale::LogitRange { lo, hi } => {
                let u = (x - lo) / (hi - lo);
                (u / (1.0 - u)).ln()
            }
        };
        if z.is_finite() {
            Ok(z)
        } else {
            Err(Error::Boundary {
                name: name.to_string(),
                value: x,
            })
        }
    }

    /// Estimation -> natural scale. Total on finite inputs.
    pub fn to_natural(&self, z: f64) -> f64 {
        match *self {
            ParamScale::Identity => z,
            ParamScale::Log => z.exp(),
            ParamScale::Logit => sigmoid(z),
            ParamScale::LogitRange { lo, hi } => lo + (hi - lo) * sigmoid(z),
        }
    }

    /// Whether `x` lies in the open domain of the transform.
    pub fn contains_open(&self, x: f64) -> bool {
        match *self {
            ParamScale::Identity => x.is_finite(),
            ParamScale::Log => x > 0.0 && x.is_finite(),
            ParamScale::Logit => x > 0.0 && x < 1.0,
            ParamScale::LogitRange { lo, hi } => x > lo && x < hi,
        }
    }

    /// Whether `x` lies in the closed domain. Fixed parameters may sit on a
    /// boundary (a reporting probability of exactly 1, a zero noise variance
    /// or turnover rate) because they are never transformed or perturbed.
    pub fn contains_closed(&self, x: f64) -> bool {
        match *self {
            ParamScale::Identity => x.is_finite(),
            ParamScale::Log => x >= 0.0 && x.is_finite(),
            ParamScale::Logit => (0.0..=1.0).contains(&x),
            ParamScale::LogitRange { lo, hi } => x >= lo && x <= hi,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Definition of a single model parameter.
#[derive(Debug, Clone)]
pub struct ParamDef {
    pub name: String,
    pub scale: ParamScale,
    pub estimated: bool,
}

impl ParamDef {
    pub fn new(name: &str, scale: ParamScale, estimated: bool) -> Self {
        Self {
            name: name.to_string(),
            scale,
            estimated,
        }
    }
}

/// Ordered set of parameter definitions; the index of a definition is the
/// position of that parameter in every dense value vector.
#[derive(Debug, Clone)]
pub struct ParamSpace {
    defs: Vec<ParamDef>,
}

impl ParamSpace {
    pub fn new(defs: Vec<ParamDef>) -> Result<Self> {
        for (i, d) in defs.iter().enumerate() {
            if defs[..i].iter().any(|e| e.name == d.name) {
                return Err(Error::Config(format!("duplicate parameter `{}`", d.name)));
            }
            if let ParamScale::LogitRange { lo, hi } = d.scale {
                if !(lo < hi) {
                    return Err(Error::Config(format!(
                        "parameter `{}`: invalid range [{lo}, {hi}]",
                        d.name
                    )));
                }
            }
        }
        Ok(Self { defs })
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn defs(&self) -> &[ParamDef] {
        &self.defs
    }

    pub fn def(&self, i: usize) -> &ParamDef {
        &self.defs[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.defs.iter().position(|d| d.name == name)
    }

    /// Index lookup that fails with a config error naming the parameter.
    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::Config(format!("unknown parameter `{name}`")))
    }

    pub fn estimated_indices(&self) -> Vec<usize> {
        (0..self.defs.len())
            .filter(|&i| self.defs[i].estimated)
            .collect()
    }

    pub fn set_estimated(&mut self, name: &str, estimated: bool) -> Result<()> {
        let i = self.require(name)?;
        self.defs[i].estimated = estimated;
        Ok(())
    }
}

/// Natural-scale parameter values over a shared [`ParamSpace`].
#[derive(Debug, Clone)]
pub struct ParamVector {
    space: Arc<ParamSpace>,
    values: Vec<f64>,
}

impl ParamVector {
    /// Builds a vector and checks every value against its scale domain:
    /// estimated parameters must lie strictly inside, fixed parameters may
    /// touch a closed boundary.
    pub fn new(space: Arc<ParamSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Config(format!(
                "expected {} parameter values, got {}",
                space.len(),
                values.len()
            )));
        }
        for (d, &v) in space.defs().iter().zip(&values) {
            let ok = if d.estimated {
                d.scale.contains_open(v)
            } else {
                d.scale.contains_closed(v)
            };
            if !ok {
                return Err(Error::Config(format!(
                    "parameter `{}` = {v} outside its domain",
                    d.name
                )));
            }
        }
        Ok(Self { space, values })
    }

    pub fn space(&self) -> &Arc<ParamSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(self.values[self.space.require(name)?])
    }

    pub fn with_value(&self, name: &str, value: f64) -> Result<Self> {
        let i = self.space.require(name)?;
        let mut values = self.values.clone();
        values[i] = value;
        Self::new(Arc::clone(&self.space), values)
    }

    /// Natural -> estimation scale. Estimated coordinates are transformed per
    /// their scale tag; fixed coordinates pass through untouched (they are
    /// never perturbed, and may legally sit on a boundary).
    pub fn to_estimation_scale(&self) -> Result<TransformedVector> {
        let mut values = self.values.clone();
        for (i, d) in self.space.defs().iter().enumerate() {
            if d.estimated {
                values[i] = d.scale.to_estimation(&d.name, values[i])?;
            }
        }
        Ok(TransformedVector {
            space: Arc::clone(&self.space),
            values,
        })
    }
}

/// Estimation-scale parameter values (fixed coordinates carried natural).
#[derive(Debug, Clone)]
pub struct TransformedVector {
    space: Arc<ParamSpace>,
    values: Vec<f64>,
}

impl TransformedVector {
    pub fn space(&self) -> &Arc<ParamSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn to_natural(&self) -> ParamVector {
        let mut values = self.values.clone();
        natural_from_estimation(&self.space, &mut values);
        ParamVector {
            space: Arc::clone(&self.space),
            values,
        }
    }
}

/// In-place estimation -> natural conversion of a dense vector.
pub fn natural_from_estimation(space: &ParamSpace, values: &mut [f64]) {
    for (i, d) in space.defs().iter().enumerate() {
        if d.estimated {
            values[i] = d.scale.to_natural(values[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn space() -> Arc<ParamSpace> {
        Arc::new(
            ParamSpace::new(vec![
                ParamDef::new("beta", ParamScale::Log, true),
                ParamDef::new("gamma", ParamScale::Log, true),
                ParamDef::new("rho", ParamScale::Logit, true),
                ParamDef::new("phi", ParamScale::LogitRange { lo: 0.0, hi: std::f64::consts::TAU }, true),
                ParamDef::new("kappa", ParamScale::Logit, false),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn transform_reference_values() {
        let p = ParamVector::new(space(), vec![1.0, 0.5, 0.5, 3.0, 1.0]).unwrap();
        let z = p.to_estimation_scale().unwrap();
        assert_relative_eq!(z.values()[0], 0.0); // log 1
        assert_relative_eq!(z.values()[1], -0.6931471805599453, epsilon = 1e-15); // log 0.5
        assert_relative_eq!(z.values()[2], 0.0); // logit 0.5
        // fixed kappa at the closed boundary passes through untouched
        assert_relative_eq!(z.values()[4], 1.0);
    }

    #[test]
    fn boundary_error_names_parameter() {
        let sp = space();
        // estimated rho at 1.0 is a boundary: rejected at construction
        let err = ParamVector::new(Arc::clone(&sp), vec![1.0, 0.5, 1.0, 3.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");
        // a fixed logit parameter moved onto the boundary and then flipped to
        // estimated trips the transform itself
        let mut raw = ParamSpace::new(vec![ParamDef::new("kappa", ParamScale::Logit, false)]).unwrap();
        raw.set_estimated("kappa", true).unwrap();
        let err = ParamScale::Logit.to_estimation("kappa", 1.0).unwrap_err();
        assert!(matches!(err, Error::Boundary { ref name, .. } if name == "kappa"));
    }

    #[test]
    fn fixed_parameters_survive_round_trip_exactly() {
        let p = ParamVector::new(space(), vec![2.0, 0.3, 0.25, 1.0, 1.0]).unwrap();
        let back = p.to_estimation_scale().unwrap().to_natural();
        assert_eq!(back.get("kappa").unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn round_trip_within_1e12_relative(
            beta in 1e-9f64..1e9,
            gamma in 1e-9f64..1e9,
            rho in 1e-9f64..0.999_999_999,
            phi in 1e-6f64..6.283,
        ) {
            let p = ParamVector::new(space(), vec![beta, gamma, rho, phi, 1.0]).unwrap();
            let back = p.to_estimation_scale().unwrap().to_natural();
            for (a, b) in p.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }
}
