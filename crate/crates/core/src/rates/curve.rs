use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Discount factors `P(0, T)` on knots, log-linear in between, flat forward
/// beyond the last knot. Always contains `P(0, 0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    maturities: Vec<f64>,
    log_df: Vec<f64>,
}

/// Three views of the same curve at one maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveViews {
    pub maturity: f64,
    pub discount: f64,
    pub zero_yield: f64,
    pub forward: f64,
}

impl DiscountCurve {
    /// Builds from `(maturity, discount factor)` pairs with strictly
    /// increasing positive maturities; `(0, 1)` is prepended when absent.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let mut maturities = vec![0.0];
        let mut log_df = vec![0.0];
        for (row, &(t, p)) in points.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::Input { row: row + 1, message: format!("discount factor {p} must be positive") });
            }
            if t == 0.0 && row == 0 {
                if (p - 1.0).abs() > 1e-12 {
                    return Err(Error::Input { row: 1, message: format!("P(0,0) must be 1, got {p}") });
                }
                continue;
            }
            let last = *maturities.last().expect("origin present");
            if !(t > last) || !t.is_finite() {
                return Err(Error::Input {
                    row: row + 1,
                    message: format!("maturity {t} must exceed the previous maturity {last}"),
                });
            }
            maturities.push(t);
            log_df.push(p.ln());
        }
        if maturities.len() < 2 {
            return domain("curve needs at least one positive maturity");
        }
        Ok(Self { maturities, log_df })
    }

    /// Builds from continuously compounded zero yields `R(T)`.
    pub fn from_zero_yields(points: &[(f64, f64)]) -> Result<Self> {
        let dfs: Vec<(f64, f64)> = points.iter().map(|&(t, r)| (t, (-r * t).exp())).collect();
        Self::new(&dfs)
    }

    /// `P(0, T) = e^{-rT}` for every `T`.
    pub fn flat(rate: f64) -> Self {
        Self { maturities: vec![0.0, 1.0], log_df: vec![0.0, -rate] }
    }

    /// Reads CSV with a `maturity_years` column and either `discount_factor`
    /// or `zero_yield`. Errors carry the 1-based data row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Input { row: 0, message: e.to_string() })?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let t_col = find("maturity_years")
            .ok_or_else(|| Error::Input { row: 0, message: "missing maturity_years column".into() })?;
        let (v_col, is_yield) = match (find("discount_factor"), find("zero_yield")) {
            (Some(c), None) => (c, false),
            (None, Some(c)) => (c, true),
            (Some(_), Some(_)) => {
                return Err(Error::Input { row: 0, message: "give discount_factor or zero_yield, not both".into() })
            }
            (None, None) => {
                return Err(Error::Input { row: 0, message: "missing discount_factor or zero_yield column".into() })
            }
        };
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::Input { row, message: e.to_string() })?;
            let parse = |col: usize| -> Result<f64> {
                let s = rec.get(col).unwrap_or("");
                s.parse::<f64>().map_err(|_| Error::Input { row, message: format!("cannot parse {s:?} as a number") })
            };
            let t = parse(t_col)?;
            let v = parse(v_col)?;
            points.push((t, if is_yield { (-v * t).exp() } else { v }));
        }
        Self::new(&points)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.maturities.iter().zip(&self.log_df).map(|(&t, &l)| (t, l.exp()))
    }

    fn segment(&self, t: f64) -> usize {
        let last = self.maturities.len() - 2;
        match self.maturities.binary_search_by(|m| m.total_cmp(&t)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    fn segment_forward(&self, i: usize) -> f64 {
        -(self.log_df[i + 1] - self.log_df[i]) / (self.maturities[i + 1] - self.maturities[i])
    }

    /// `P(0, T)`.
    pub fn discount(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return (-self.forward(0.0) * t).exp();
        }
        let i = self.segment(t);
        (self.log_df[i] - self.segment_forward(i) * (t - self.maturities[i])).exp()
    }

    /// Instantaneous forward `-∂ ln P/∂T`, right-continuous at knots.
    pub fn forward(&self, t: f64) -> f64 {
        self.segment_forward(self.segment(t.max(0.0)))
    }

    /// Continuously compounded zero yield `-ln P / T`; the short rate at 0.
    pub fn zero_yield(&self, t: f64) -> f64 {
        if t <= 0.0 {
            self.forward(0.0)
        } else {
            -self.discount(t).ln() / t
        }
    }

    /// Fails if any forward rate is negative.
    pub fn require_nonnegative_forwards(&self) -> Result<()> {
        for i in 0..self.maturities.len() - 1 {
            let f = self.segment_forward(i);
            if f < 0.0 {
                return Err(Error::Input {
                    row: i + 1,
                    message: format!("negative forward rate {f} on [{}, {}]", self.maturities[i], self.maturities[i + 1]),
                });
            }
        }
        Ok(())
    }
}

pub fn curve_views(curve: &DiscountCurve, maturity: f64) -> CurveViews {
    CurveViews {
        maturity,
        discount: curve.discount(maturity),
        zero_yield: curve.zero_yield(maturity),
        forward: curve.forward(maturity),
    }
}
