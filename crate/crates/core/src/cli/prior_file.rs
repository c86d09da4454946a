//! JSON document holding a constructed prior.

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::PrescribedEstimator;
use crate::moment_solver::{DiscretePrior, MomentSolution};
use crate::numerics::decimal::{digits_for_bits, format_significant, parse_rational, rational_to_string};
use crate::numerics::{BigFloat, Real};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(default)]
    pub c0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    /// `rational` or `bigfloat`.
    pub kind: String,
    pub bits: u32,
}

/// `num/den` strings, present only for the rational backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactFields {
    pub support: Vec<String>,
    pub weights_pw: Vec<String>,
    pub residuals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorFile {
    pub format_version: u32,
    pub estimator: EstimatorSpec,
    #[serde(rename = "M")]
    pub m: usize,
    pub backend: BackendSpec,
    pub support: Vec<String>,
    pub weights_pw: Vec<String>,
    pub weights_px: Vec<String>,
    pub residuals: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactFields>,
}

impl EstimatorSpec {
    pub fn from_estimator(f: &PrescribedEstimator) -> Self {
        match f {
            PrescribedEstimator::Affine { a, b } => EstimatorSpec {
                kind: f.kind().into(),
                a: Some(rational_to_string(a)),
                b: Some(rational_to_string(b)),
                c0: None,
                values: None,
            },
            PrescribedEstimator::SaturatingAffine { a, b, c0 } => EstimatorSpec {
                kind: f.kind().into(),
                a: Some(rational_to_string(a)),
                b: Some(rational_to_string(b)),
                c0: Some(*c0),
                values: None,
            },
            PrescribedEstimator::Table { values } => EstimatorSpec {
                kind: f.kind().into(),
                a: None,
                b: None,
                c0: f.c0(),
                values: Some(values.iter().map(rational_to_string).collect()),
            },
        }
    }

    pub fn to_estimator(&self) -> Result<PrescribedEstimator> {
        let field = |v: &Option<String>, name: &str| -> Result<Rational> {
            let text = v
                .as_ref()
                .ok_or_else(|| Error::Parse(format!("estimator field `{name}` is missing")))?;
            parse_rational(text)
        };
        match self.kind.as_str() {
            "affine" => PrescribedEstimator::affine(field(&self.a, "a")?, field(&self.b, "b")?),
            "saturating_affine" => {
                let c0 = self
                    .c0
                    .ok_or_else(|| Error::Parse("estimator field `c0` is missing".into()))?;
                PrescribedEstimator::saturating_affine(field(&self.a, "a")?, field(&self.b, "b")?, c0)
            }
            "table" => {
                let values = self
                    .values
                    .as_ref()
                    .ok_or_else(|| Error::Parse("estimator field `values` is missing".into()))?;
                PrescribedEstimator::table(
                    values.iter().map(|v| parse_rational(v)).collect::<Result<_>>()?,
                )
            }
            other => Err(Error::Parse(format!("unknown estimator kind {other:?}"))),
        }
    }
}

fn float_text(value: &BigFloat, bits: u32) -> String {
    format_significant(&value.0, digits_for_bits(bits))
}

/// Exact decimal for terminating rationals, rounded to `bits` otherwise.
fn decimal_string<T: Real>(value: &T, bits: u32) -> String {
    if let Some(exact) = value.to_exact_string() {
        let r: Rational = exact.parse().expect("rug prints parseable rationals");
        let text = rational_to_string(&r);
        if !text.contains('/') {
            return text;
        }
    }
    float_text(&value.to_big_float(bits), bits)
}

impl PriorFile {
    pub fn build<T: Real>(
        f: &PrescribedEstimator,
        solution: &MomentSolution<T>,
        tilted: &DiscretePrior<BigFloat>,
        bits: u32,
    ) -> Self {
        let dec = |v: &[T]| v.iter().map(|x| decimal_string(x, bits)).collect::<Vec<_>>();
        let exact = if T::EXACT {
            let ex = |v: &[T]| {
                v.iter()
                    .map(|x| x.to_exact_string().expect("exact backend"))
                    .collect::<Vec<_>>()
            };
            Some(ExactFields {
                support: ex(solution.support()),
                weights_pw: ex(solution.weights()),
                residuals: ex(solution.residuals()),
            })
        } else {
            None
        };
        PriorFile {
            format_version: FORMAT_VERSION,
            estimator: EstimatorSpec::from_estimator(f),
            m: solution.m(),
            backend: BackendSpec {
                kind: if T::EXACT { "rational" } else { "bigfloat" }.into(),
                bits,
            },
            support: dec(solution.support()),
            weights_pw: dec(solution.weights()),
            weights_px: tilted.weights().iter().map(|w| float_text(w, bits)).collect(),
            residuals: dec(solution.residuals()),
            exact,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("prior file serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PriorFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("malformed prior file: {e}")))?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment_solver::{solve_direct, tilt_to_prior};
    use crate::numerics::{ExactRational, PrecisionConfig};

    #[test]
    fn rational_file_layout() {
        let f = PrescribedEstimator::affine_from_str("0.3", "0.3").unwrap();
        let cfg = PrecisionConfig::default();
        let sol = solve_direct::<ExactRational>(&f, 2, &(), &cfg).unwrap();
        let px = tilt_to_prior(&sol, 256).unwrap();
        let file = PriorFile::build(&f, &sol, &px, 256);
        assert_eq!(file.support, vec!["0.3", "0.6", "0.9"]);
        assert_eq!(file.weights_pw, vec!["0.5", "0.2", "0.3"]);
        assert_eq!(file.residuals, vec!["0", "0"]);
        assert_eq!(file.exact.as_ref().unwrap().weights_pw, vec!["1/2", "1/5", "3/10"]);
        assert!(file.weights_px[0].starts_with("0.37976392915"));
        let json = file.to_json();
        assert!(json.contains("\"M\": 2"));
        assert_eq!(PriorFile::from_json(&json).unwrap(), file);
        assert_eq!(file.estimator.to_estimator().unwrap(), f);
    }

    #[test]
    fn rejects_other_versions() {
        let f = PrescribedEstimator::affine_from_str("0.3", "0.3").unwrap();
        let cfg = PrecisionConfig::default();
        let sol = solve_direct::<ExactRational>(&f, 1, &(), &cfg).unwrap();
        let px = tilt_to_prior(&sol, 256).unwrap();
        let mut file = PriorFile::build(&f, &sol, &px, 256);
        file.format_version = 2;
        assert!(PriorFile::from_json(&file.to_json()).is_err());
        assert!(PriorFile::from_json("{").is_err());
    }

    #[test]
    fn estimator_specs_round_trip() {
        let sat = PrescribedEstimator::saturating_affine(Rational::from((3, 10)), Rational::from((1, 3)), 5)
            .unwrap();
        assert_eq!(EstimatorSpec::from_estimator(&sat).to_estimator().unwrap(), sat);
        let table = PrescribedEstimator::table(vec![Rational::from(1), Rational::from((5, 2))]).unwrap();
        assert_eq!(EstimatorSpec::from_estimator(&table).to_estimator().unwrap(), table);
    }
}
