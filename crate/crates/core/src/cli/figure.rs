//! Tabulated figure data written as CSV.

use std::io::Write;

use rug::Rational;

use crate::error::{Error, Result};
use crate::estimator::PrescribedEstimator;
use crate::gamma_baseline::GammaPrior;
use crate::moment_solver::{solve_direct, solve_direct_escalating};
use crate::numerics::decimal::format_significant;
use crate::numerics::{BigFloat, ExactRational, PrecisionConfig, Real};
use crate::posterior::{posterior, TiltedPrior};

/// Significant digits written for every numeric cell.
pub const CSV_DIGITS: usize = 15;

/// Rectangular table of decimal strings with a header row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FigureTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl FigureTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        FigureTable { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Internal(format!(
                "row has {} cells but the header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn cell<T: Real>(value: &T) -> String {
    value.to_decimal(CSV_DIGITS)
}

fn float_cell(value: &BigFloat) -> String {
    format_significant(&value.0, CSV_DIGITS)
}

/// Gamma baseline: `(y, median − mean)` for `y = 0, …, y_max`.
pub fn gap_table(gamma: &GammaPrior, y_max: u64, config: &PrecisionConfig) -> Result<FigureTable> {
    let mut table = FigureTable::new(["y", "gap"]);
    for (y, gap) in gamma.median_mean_gap_curve(y_max, config)? {
        table.push_row(vec![y.to_string(), float_cell(&gap)])?;
    }
    Ok(table)
}

/// Tilted-prior levels available to the figures, in either backend.
pub enum Levels {
    Rational(Vec<TiltedPrior<ExactRational>>),
    Float(Vec<TiltedPrior<BigFloat>>),
}

impl Levels {
    pub fn build(
        f: &PrescribedEstimator,
        ms: &[usize],
        exact: bool,
        config: &PrecisionConfig,
    ) -> Result<Self> {
        if exact {
            let levels = ms
                .iter()
                .map(|&m| solve_direct::<ExactRational>(f, m, &(), config).map(|s| TiltedPrior::new(s, config)))
                .collect::<Result<_>>()?;
            Ok(Levels::Rational(levels))
        } else {
            let levels = ms
                .iter()
                .map(|&m| {
                    solve_direct_escalating(f, m, config).map(|(s, used)| TiltedPrior::new(s, &used))
                })
                .collect::<Result<_>>()?;
            Ok(Levels::Float(levels))
        }
    }
}

/// Posterior medians of each level: columns `y, med_M<m>…`.
pub fn medians_table(levels: &Levels, y_max: u64) -> Result<FigureTable> {
    fn columns<T: Real>(priors: &[TiltedPrior<T>], y_max: u64) -> Result<(Vec<String>, Vec<Vec<String>>)> {
        let header = priors.iter().map(|p| format!("med_M{}", p.solution().m())).collect();
        let cols = priors
            .iter()
            .map(|p| (0..=y_max).map(|y| posterior(p, y).map(|s| cell(&s.median))).collect())
            .collect::<Result<_>>()?;
        Ok((header, cols))
    }
    let (names, cols) = match levels {
        Levels::Rational(p) => columns(p, y_max)?,
        Levels::Float(p) => columns(p, y_max)?,
    };
    let mut table = FigureTable::new(std::iter::once("y".to_string()).chain(names));
    for y in 0..=y_max {
        let mut row = vec![y.to_string()];
        row.extend(cols.iter().map(|c| c[y as usize].clone()));
        table.push_row(row)?;
    }
    Ok(table)
}

/// Long-format cdf table `series, x, cdf`: the step points of each tilted
/// prior followed by `points` samples of the gamma prior cdf on
/// `[0, largest atom]`.
pub fn cdf_table(
    levels: &Levels,
    gamma: &GammaPrior,
    points: usize,
    config: &PrecisionConfig,
) -> Result<FigureTable> {
    let mut table = FigureTable::new(["series", "x", "cdf"]);
    let mut x_max = BigFloat::with_val(config.bits, 0);
    let mut push_levels = |table: &mut FigureTable, m: usize, steps: Vec<(BigFloat, BigFloat)>| -> Result<()> {
        for (x, c) in steps {
            if x > x_max {
                x_max = x.clone();
            }
            table.push_row(vec![format!("M={m}"), float_cell(&x), float_cell(&c)])?;
        }
        Ok(())
    };
    match levels {
        Levels::Rational(priors) => {
            for p in priors {
                let steps = p.materialize(config.bits)?.cdf_steps();
                push_levels(&mut table, p.solution().m(), steps)?;
            }
        }
        Levels::Float(priors) => {
            for p in priors {
                let steps = p.materialize(config.bits)?.cdf_steps();
                push_levels(&mut table, p.solution().m(), steps)?;
            }
        }
    }
    let points = points.max(2);
    for k in 0..points {
        let x = x_max.clone() * BigFloat::from_rational(&Rational::from((k as i64, points as i64 - 1)), &config.bits);
        let c = gamma.prior_cdf(&x)?;
        table.push_row(vec!["gamma".into(), float_cell(&x), float_cell(&c)])?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_must_stay_rectangular() {
        let mut t = FigureTable::new(["a", "b"]);
        assert!(t.push_row(vec!["1".into()]).is_err());
        t.push_row(vec!["1".into(), "2".into()]).unwrap();
        assert_eq!(t.to_csv_string(), "a,b\n1,2\n");
    }

    #[test]
    fn medians_for_small_levels() {
        let f = PrescribedEstimator::affine_from_str("0.3", "0.3").unwrap();
        let cfg = PrecisionConfig::default();
        let levels = Levels::build(&f, &[2, 4], true, &cfg).unwrap();
        let t = medians_table(&levels, 3).unwrap();
        assert_eq!(t.header(), ["y", "med_M2", "med_M4"]);
        assert_eq!(t.column("med_M4").unwrap(), ["0.3", "0.6", "0.9", "1.2"]);
        assert_eq!(&t.column("med_M2").unwrap()[..2], ["0.3", "0.6"]);
        let float_levels = Levels::build(&f, &[2, 4], false, &cfg).unwrap();
        let tf = medians_table(&float_levels, 3).unwrap();
        assert_eq!(tf.column("med_M4"), t.column("med_M4"));
    }
}
