//! Model parameter vector and the structural variants it parameterizes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a parameter in the full 8-dimensional vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    OmegaA,
    OmegaF,
    SigmaAPrime,
    SigmaFPrime,
    Gamma,
    Lambda,
    CF,
    Zeta,
}

impl ParamId {
    pub const ALL: [ParamId; 8] = [
        ParamId::OmegaA,
        ParamId::OmegaF,
        ParamId::SigmaAPrime,
        ParamId::SigmaFPrime,
        ParamId::Gamma,
        ParamId::Lambda,
        ParamId::CF,
        ParamId::Zeta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::OmegaA => "omega_a",
            ParamId::OmegaF => "omega_f",
            ParamId::SigmaAPrime => "sigma_a_prime",
            ParamId::SigmaFPrime => "sigma_f_prime",
            ParamId::Gamma => "gamma",
            ParamId::Lambda => "lambda",
            ParamId::CF => "c_f",
            ParamId::Zeta => "zeta",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of the dynamical scanpath model.
///
/// Decay rates are in 1/s, spans in degrees. The spans are the
/// re-parametrized ones: the Gaussian inputs use `σ = σ′·√exponent`, so that
/// raising the map to the exponent yields a peak of width `σ′` again.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_a: f64,
    pub omega_f: f64,
    pub sigma_a_prime: f64,
    pub sigma_f_prime: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub c_f: f64,
    pub zeta: f64,
}

impl ModelParams {
    /// Maximum-likelihood point estimate reported for the original dataset.
    /// The attention decay rate there was effectively unbounded; a fast but
    /// finite rate with identical predictions is used instead.
    pub fn reference_fit() -> Self {
        Self {
            omega_a: 100.0,
            omega_f: 1.9298,
            sigma_a_prime: 5.9082,
            sigma_f_prime: 4.5531,
            gamma: 44.780,
            lambda: 0.8115,
            c_f: 0.3637,
            zeta: 0.0722,
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.omega_a,
            self.omega_f,
            self.sigma_a_prime,
            self.sigma_f_prime,
            self.gamma,
            self.lambda,
            self.c_f,
            self.zeta,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            omega_a: a[0],
            omega_f: a[1],
            sigma_a_prime: a[2],
            sigma_f_prime: a[3],
            gamma: a[4],
            lambda: a[5],
            c_f: a[6],
            zeta: a[7],
        }
    }

    pub fn get(&self, id: ParamId) -> f64 {
        self.to_array()[id.index()]
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        let mut a = self.to_array();
        a[id.index()] = value;
        *self = Self::from_array(a);
    }

    /// Span of the attention Gaussian input.
    pub fn sigma_a(&self) -> f64 {
        self.sigma_a_prime * self.lambda.sqrt()
    }

    /// Span of the inhibition Gaussian input.
    pub fn sigma_f(&self) -> f64 {
        self.sigma_f_prime * self.gamma.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for id in ParamId::ALL {
            let v = self.get(id);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{id} must be positive and finite, got {v}")));
            }
        }
        if self.zeta >= 1.0 {
            return Err(Error::InvalidParameter(format!("zeta must lie in (0, 1), got {}", self.zeta)));
        }
        let (sa, sf) = (self.sigma_a(), self.sigma_f());
        if !(sa > 0.0 && sa.is_finite() && sf > 0.0 && sf.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "derived spans must be positive and finite, got sigma_a={sa}, sigma_f={sf}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = ParamId::ALL.iter().map(|id| format!("{}={:.6e}", id, self.get(*id))).collect();
        f.write_str(&parts.join(" "))
    }
}

/// How the inhibition map enters the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inhibition {
    Subtractive,
    Divisive,
    None,
}

/// Structural model variant: inhibition form plus optionally fixed exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelVariant {
    pub inhibition: Inhibition,
    pub lambda_fixed: Option<f64>,
    pub gamma_fixed: Option<f64>,
}

impl ModelVariant {
    pub const fn new(inhibition: Inhibition) -> Self {
        Self { inhibition, lambda_fixed: None, gamma_fixed: None }
    }

    pub fn subtractive() -> Self {
        Self::new(Inhibition::Subtractive)
    }

    pub fn divisive() -> Self {
        Self::new(Inhibition::Divisive)
    }

    pub fn no_inhibition() -> Self {
        Self::new(Inhibition::None)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_fixed = Some(lambda);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_fixed = Some(gamma);
        self
    }

    /// The comparison grid: subtractive and divisive inhibition with each of
    /// λ and γ free or fixed to 1, plus no inhibition with λ free or fixed.
    pub fn comparison_set() -> Vec<ModelVariant> {
        let mut out = Vec::with_capacity(10);
        for base in [Self::subtractive(), Self::divisive()] {
            out.push(base);
            out.push(base.with_lambda(1.0));
            out.push(base.with_gamma(1.0));
            out.push(base.with_lambda(1.0).with_gamma(1.0));
        }
        out.push(Self::no_inhibition());
        out.push(Self::no_inhibition().with_lambda(1.0));
        out
    }

    /// Parameters searched by the fitter, in canonical order.
    pub fn free_params(&self) -> Vec<ParamId> {
        ParamId::ALL
            .into_iter()
            .filter(|id| match id {
                ParamId::Lambda => self.lambda_fixed.is_none(),
                ParamId::Gamma => self.inhibition != Inhibition::None && self.gamma_fixed.is_none(),
                ParamId::OmegaF | ParamId::SigmaFPrime | ParamId::CF => self.inhibition != Inhibition::None,
                _ => true,
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.free_params().len()
    }

    /// Forces fixed exponents and unused inhibition parameters onto `params`.
    pub fn apply_fixed(&self, params: &mut ModelParams) {
        if let Some(l) = self.lambda_fixed {
            params.lambda = l;
        }
        if self.inhibition == Inhibition::None {
            params.omega_f = 1.0;
            params.sigma_f_prime = 1.0;
            params.gamma = 1.0;
            params.c_f = 1.0;
        } else if let Some(g) = self.gamma_fixed {
            params.gamma = g;
        }
    }

    /// Natural-log coordinates of the free parameters.
    pub fn to_log_free(&self, params: &ModelParams) -> Vec<f64> {
        self.free_params().into_iter().map(|id| params.get(id).ln()).collect()
    }

    /// Parameters from natural-log coordinates of the free parameters.
    /// Parameters that are not free are taken from `base`.
    pub fn from_log_free(&self, log_free: &[f64], base: &ModelParams) -> Result<ModelParams> {
        let ids = self.free_params();
        if ids.len() != log_free.len() {
            return Err(Error::InvalidArgument(format!(
                "variant {self} has {} free parameters, got {}",
                ids.len(),
                log_free.len()
            )));
        }
        let mut p = *base;
        for (id, v) in ids.into_iter().zip(log_free) {
            p.set(id, v.exp());
        }
        self.apply_fixed(&mut p);
        Ok(p)
    }

    /// Whether `other` is a special case of `self` (same inhibition, every
    /// exponent free in `other` is also free here, shared fixed values agree).
    pub fn nests(&self, other: &ModelVariant) -> bool {
        if self == other || self.inhibition != other.inhibition {
            return false;
        }
        let ok = |mine: Option<f64>, theirs: Option<f64>| match (mine, theirs) {
            (None, _) => true,
            (Some(a), Some(b)) => a == b,
            (Some(_), None) => false,
        };
        ok(self.lambda_fixed, other.lambda_fixed) && ok(self.gamma_fixed, other.gamma_fixed)
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.inhibition {
            Inhibition::Subtractive => "subtractive",
            Inhibition::Divisive => "divisive",
            Inhibition::None => "none",
        };
        f.write_str(base)?;
        if let Some(l) = self.lambda_fixed {
            write!(f, "-lambda{l}")?;
        }
        if self.inhibition != Inhibition::None {
            if let Some(g) = self.gamma_fixed {
                write!(f, "-gamma{g}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    /// Parses names like `divisive`, `subtractive-lambda1`, `divisive-lambda1-gamma1`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split('-');
        let inhibition = match parts.next().unwrap_or_default() {
            "subtractive" => Inhibition::Subtractive,
            "divisive" => Inhibition::Divisive,
            "none" | "noinhibition" => Inhibition::None,
            other => return Err(Error::Configuration(format!("unknown inhibition kind `{other}`"))),
        };
        let mut v = ModelVariant::new(inhibition);
        for part in parts {
            let parse = |rest: &str| {
                rest.parse::<f64>()
                    .ok()
                    .filter(|x| *x > 0.0 && x.is_finite())
                    .ok_or_else(|| Error::Configuration(format!("bad exponent in variant `{s}`")))
            };
            if let Some(rest) = part.strip_prefix("lambda") {
                v.lambda_fixed = Some(parse(rest)?);
            } else if let Some(rest) = part.strip_prefix("gamma") {
                if inhibition == Inhibition::None {
                    return Err(Error::Configuration(format!("variant `{s}` has no gamma")));
                }
                v.gamma_fixed = Some(parse(rest)?);
            } else {
                return Err(Error::Configuration(format!("unknown variant modifier `{part}` in `{s}`")));
            }
        }
        Ok(v)
    }
}

impl Serialize for ModelVariantName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

/// A variant that (de)serializes as its canonical name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelVariantName(pub ModelVariant);

impl<'de> Deserialize<'de> for ModelVariantName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(ModelVariantName).map_err(serde::de::Error::custom)
    }
}
