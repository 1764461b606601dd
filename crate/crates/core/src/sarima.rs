//! Seasonal ARIMA `(p,r,q)(P,R,Q)S` fitted by conditional sum of squares.
//!
//! The model is `φ(z)Φ(z^S)(1-z)^r(1-z^S)^R y(t) = θ(z)Θ(z^S)ε(t)` with every
//! polynomial written as `1 - Σ c_j z^j`. Residuals are computed recursively
//! with pre-sample residuals set to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{self, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SarimaOrder {
    pub p: usize,
    pub r: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_r: usize,
    pub seasonal_q: usize,
    pub season: usize,
}

impl SarimaOrder {
    pub fn new(
        p: usize,
        r: usize,
        q: usize,
        sp: usize,
        sr: usize,
        sq: usize,
        season: usize,
    ) -> Self {
        SarimaOrder {
            p,
            r,
            q,
            seasonal_p: sp,
            seasonal_r: sr,
            seasonal_q: sq,
            season,
        }
    }

    /// `(1,1,1)(1,1,1)S`.
    pub fn daily(season: usize) -> Self {
        SarimaOrder::new(1, 1, 1, 1, 1, 1, season)
    }

    pub fn n_coefficients(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    pub fn ar_degree(&self) -> usize {
        self.p + self.seasonal_p * self.season
    }

    pub fn ma_degree(&self) -> usize {
        self.q + self.seasonal_q * self.season
    }

    pub fn diff_degree(&self) -> usize {
        self.r + self.seasonal_r * self.season
    }

    pub fn validate(&self) -> Result<()> {
        if self.season == 0 {
            return Err(Error::InvalidConfig("SARIMA season must be >= 1".into()));
        }
        Ok(())
    }

    /// Rules used when enumerating candidate orders.
    pub fn validate_search(&self) -> Result<()> {
        self.validate()?;
        if self.r + self.seasonal_r > 2 || self.seasonal_p + self.seasonal_q > 2 {
            return Err(Error::InvalidConfig(format!(
                "candidate {self} violates r+R <= 2, P+Q <= 2"
            )));
        }
        Ok(())
    }

    fn min_len(&self) -> usize {
        self.diff_degree() + self.ar_degree().max(self.ma_degree()) + 1
    }
}

impl std::fmt::Display for SarimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{},{})({},{},{}){}",
            self.p, self.r, self.q, self.seasonal_p, self.seasonal_r, self.seasonal_q, self.season
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaCoefficients {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub seasonal_phi: Vec<f64>,
    pub seasonal_theta: Vec<f64>,
}

impl SarimaCoefficients {
    pub fn zeros(order: &SarimaOrder) -> Self {
        Self::from_flat(order, &vec![0.0; order.n_coefficients()])
    }

    /// Flat layout: `phi ++ theta ++ seasonal_phi ++ seasonal_theta`.
    pub fn from_flat(order: &SarimaOrder, x: &[f64]) -> Self {
        let (phi, rest) = x.split_at(order.p);
        let (theta, rest) = rest.split_at(order.q);
        let (sphi, stheta) = rest.split_at(order.seasonal_p);
        SarimaCoefficients {
            phi: phi.to_vec(),
            theta: theta.to_vec(),
            seasonal_phi: sphi.to_vec(),
            seasonal_theta: stheta.to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        [
            &self.phi[..],
            &self.theta[..],
            &self.seasonal_phi[..],
            &self.seasonal_theta[..],
        ]
        .concat()
    }

    fn check(&self, order: &SarimaOrder) -> Result<()> {
        if self.phi.len() != order.p
            || self.theta.len() != order.q
            || self.seasonal_phi.len() != order.seasonal_p
            || self.seasonal_theta.len() != order.seasonal_q
        {
            return Err(Error::Shape(format!(
                "coefficient counts do not match order {order}"
            )));
        }
        Ok(())
    }
}

/// Dense polynomial in the delay operator, index = lag.
fn one_minus(coefs: &[f64], stride: usize) -> Vec<f64> {
    let mut p = vec![0.0; coefs.len() * stride + 1];
    p[0] = 1.0;
    for (j, c) in coefs.iter().enumerate() {
        p[(j + 1) * stride] = -c;
    }
    p
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn diff_poly(order: &SarimaOrder) -> Vec<f64> {
    let mut p = vec![1.0];
    for _ in 0..order.r {
        p = mul(&p, &[1.0, -1.0]);
    }
    for _ in 0..order.seasonal_r {
        p = mul(&p, &one_minus(&[1.0], order.season));
    }
    p
}

/// Non-zero `(lag, coefficient)` pairs with lag >= 1.
fn sparse_tail(p: &[f64]) -> Vec<(usize, f64)> {
    p.iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| (k, *c))
        .collect()
}

struct Operators {
    /// φ(z)Φ(z^S)
    ar: Vec<(usize, f64)>,
    /// φ(z)Φ(z^S)(1-z)^r(1-z^S)^R
    full_ar: Vec<(usize, f64)>,
    /// θ(z)Θ(z^S)
    ma: Vec<(usize, f64)>,
}

impl Operators {
    fn new(order: &SarimaOrder, c: &SarimaCoefficients) -> Self {
        let ar = mul(
            &one_minus(&c.phi, 1),
            &one_minus(&c.seasonal_phi, order.season),
        );
        let ma = mul(
            &one_minus(&c.theta, 1),
            &one_minus(&c.seasonal_theta, order.season),
        );
        let full = mul(&ar, &diff_poly(order));
        Operators {
            ar: sparse_tail(&ar),
            full_ar: sparse_tail(&full),
            ma: sparse_tail(&ma),
        }
    }
}

/// Applies `r` first differences then `R` seasonal differences of span `S`.
pub fn seasonal_difference(
    y: &[f64],
    r: usize,
    seasonal_r: usize,
    season: usize,
) -> Result<Vec<f64>> {
    if y.len() <= r + seasonal_r * season {
        return Err(Error::InsufficientHistory(format!(
            "{} values cannot be differenced {r} + {seasonal_r}x{season} times",
            y.len()
        )));
    }
    let mut w = y.to_vec();
    for _ in 0..r {
        w = w.windows(2).map(|p| p[1] - p[0]).collect();
    }
    for _ in 0..seasonal_r {
        w = (season..w.len()).map(|i| w[i] - w[i - season]).collect();
    }
    Ok(w)
}

/// Inverts [`seasonal_difference`] given the first `r + R·S` original values.
pub fn undifference(
    w: &[f64],
    head: &[f64],
    r: usize,
    seasonal_r: usize,
    season: usize,
) -> Result<Vec<f64>> {
    let order = SarimaOrder::new(0, r, 0, 0, seasonal_r, 0, season);
    let deg = order.diff_degree();
    if head.len() != deg {
        return Err(Error::Shape(format!(
            "need {deg} initial values, got {}",
            head.len()
        )));
    }
    let d = sparse_tail(&diff_poly(&order));
    let mut y = head.to_vec();
    for (i, &wi) in w.iter().enumerate() {
        let t = i + deg;
        let mut v = wi;
        for &(k, c) in &d {
            v -= c * y[t - k];
        }
        y.push(v);
    }
    Ok(y)
}

/// Residuals on the differenced series, aligned with it; entries before the
/// AR degree are the zero pre-sample values.
fn residuals_differenced(w: &[f64], ops: &Operators, ar_degree: usize) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for t in ar_degree..w.len() {
        let mut v = w[t];
        for &(k, c) in &ops.ar {
            v += c * w[t - k];
        }
        for &(k, c) in &ops.ma {
            if k <= t {
                v -= c * e[t - k];
            }
        }
        e[t] = v;
    }
    e
}

fn check_len(order: &SarimaOrder, n: usize) -> Result<()> {
    order.validate()?;
    if n < order.min_len() {
        return Err(Error::InsufficientHistory(format!(
            "order {order} needs at least {} values, got {n}",
            order.min_len()
        )));
    }
    Ok(())
}

/// CSS residuals `ε(t)` for `t >= AR degree` of the differenced series.
pub fn css_residuals(
    order: &SarimaOrder,
    coefs: &SarimaCoefficients,
    y: &[f64],
) -> Result<Vec<f64>> {
    coefs.check(order)?;
    check_len(order, y.len())?;
    let w = seasonal_difference(y, order.r, order.seasonal_r, order.season)?;
    let e = residuals_differenced(&w, &Operators::new(order, coefs), order.ar_degree());
    Ok(e[order.ar_degree()..].to_vec())
}

/// Conditional sum of squared residuals.
pub fn css_loss(order: &SarimaOrder, coefs: &SarimaCoefficients, y: &[f64]) -> Result<f64> {
    Ok(css_residuals(order, coefs, y)?.iter().map(|e| e * e).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaModel {
    pub order: SarimaOrder,
    pub coefficients: SarimaCoefficients,
    pub css: f64,
    /// Number of residuals entering the CSS.
    pub n_effective: usize,
    pub sigma2: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Last `ar_degree + diff_degree` observations.
    y_tail: Vec<f64>,
    /// Last `ma_degree` residuals.
    e_tail: Vec<f64>,
    observed: usize,
}

impl SarimaModel {
    /// Builds a model with given coefficients, conditioning on `y`.
    pub fn from_coefficients(
        order: SarimaOrder,
        coefficients: SarimaCoefficients,
        y: &[f64],
    ) -> Result<Self> {
        coefficients.check(&order)?;
        check_len(&order, y.len())?;
        let w = seasonal_difference(y, order.r, order.seasonal_r, order.season)?;
        let ops = Operators::new(&order, &coefficients);
        let e = residuals_differenced(&w, &ops, order.ar_degree());
        let css: f64 = e.iter().map(|v| v * v).sum();
        let n_effective = w.len() - order.ar_degree();
        let full_deg = order.ar_degree() + order.diff_degree();
        let ma_deg = order.ma_degree();
        let mut e_tail = vec![0.0; ma_deg.saturating_sub(e.len())];
        e_tail.extend_from_slice(&e[e.len().saturating_sub(ma_deg)..]);
        Ok(SarimaModel {
            order,
            coefficients,
            css,
            n_effective,
            sigma2: css / n_effective as f64,
            converged: true,
            iterations: 0,
            y_tail: y[y.len() - full_deg..].to_vec(),
            e_tail,
            observed: y.len(),
        })
    }

    /// Number of observations the model has been conditioned on.
    pub fn observed(&self) -> usize {
        self.observed
    }

    /// Conditions on further observations without refitting.
    pub fn extend(&mut self, new: &[f64]) {
        if new.is_empty() {
            return;
        }
        let ops = Operators::new(&self.order, &self.coefficients);
        let full_deg = self.y_tail.len();
        let ma_deg = self.e_tail.len();
        let mut ys = std::mem::take(&mut self.y_tail);
        let mut es = std::mem::take(&mut self.e_tail);
        for &y in new {
            ys.push(y);
            let t = ys.len() - 1;
            let mut v = y;
            for &(k, c) in &ops.full_ar {
                v += c * ys[t - k];
            }
            let te = es.len();
            for &(k, c) in &ops.ma {
                v -= c * es[te - k];
            }
            es.push(v);
        }
        self.y_tail = ys[ys.len() - full_deg..].to_vec();
        self.e_tail = es[es.len() - ma_deg..].to_vec();
        self.observed += new.len();
    }

    pub fn aic(&self) -> f64 {
        let n = self.n_effective as f64;
        n * (self.css / n).ln() + 2.0 * (self.order.n_coefficients() + 1) as f64
    }
}

/// Forecasts `horizon` steps past the last conditioned observation, with
/// future residuals set to zero.
pub fn sarima_forecast(model: &SarimaModel, horizon: usize) -> Result<Vec<f64>> {
    let full_deg = model.order.ar_degree() + model.order.diff_degree();
    if model.y_tail.len() != full_deg || model.e_tail.len() != model.order.ma_degree() {
        return Err(Error::InsufficientHistory(
            "SARIMA model is missing its training tail".into(),
        ));
    }
    let ops = Operators::new(&model.order, &model.coefficients);
    let mut ys = model.y_tail.clone();
    let mut es = model.e_tail.clone();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let t = ys.len();
        let te = es.len();
        let mut v = 0.0;
        for &(k, c) in &ops.full_ar {
            v -= c * ys[t - k];
        }
        for &(k, c) in &ops.ma {
            v += c * es[te - k];
        }
        ys.push(v);
        es.push(0.0);
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SarimaFitOptions {
    pub max_iterations: usize,
    pub diameter_tol: f64,
    /// Minimum training length in seasons.
    pub min_seasons: usize,
}

impl Default for SarimaFitOptions {
    fn default() -> Self {
        SarimaFitOptions {
            max_iterations: 500,
            diameter_tol: 1e-6,
            min_seasons: 10,
        }
    }
}

pub const COEFFICIENT_BOUND: f64 = 0.99;
pub const START_VALUE: f64 = 0.1;

/// Fits the four coefficient groups by simplex descent on the CSS.
pub fn sarima_fit(y: &[f64], order: SarimaOrder, opts: &SarimaFitOptions) -> Result<SarimaModel> {
    check_len(&order, y.len())?;
    if y.len() < opts.min_seasons * order.season {
        return Err(Error::InsufficientHistory(format!(
            "SARIMA fit needs {} seasons of data",
            opts.min_seasons
        )));
    }
    let w = seasonal_difference(y, order.r, order.seasonal_r, order.season)?;
    let n = order.n_coefficients();
    let ar_deg = order.ar_degree();
    let objective = |x: &[f64]| {
        let c = SarimaCoefficients::from_flat(&order, x);
        residuals_differenced(&w, &Operators::new(&order, &c), ar_deg)
            .iter()
            .map(|e| e * e)
            .sum::<f64>()
    };
    let result = simplex::minimize(
        objective,
        &vec![START_VALUE; n],
        &vec![-COEFFICIENT_BOUND; n],
        &vec![COEFFICIENT_BOUND; n],
        &SimplexOptions {
            max_iterations: opts.max_iterations,
            diameter_tol: opts.diameter_tol,
            initial_step: 0.1,
        },
    );
    if !result.converged {
        log::debug!(
            "SARIMA {order} stopped after {} iterations without converging",
            result.iterations
        );
    }
    let mut model =
        SarimaModel::from_coefficients(order, SarimaCoefficients::from_flat(&order, &result.x), y)?;
    model.converged = result.converged;
    model.iterations = result.iterations;
    Ok(model)
}

/// Picks the candidate with the lowest AIC; ties go to fewer coefficients,
/// then to the lexicographically smaller order.
pub fn aic_order_search(
    y: &[f64],
    candidates: &[SarimaOrder],
    opts: &SarimaFitOptions,
) -> Result<SarimaOrder> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("empty SARIMA candidate set".into()));
    }
    for order in candidates {
        order.validate_search()?;
    }
    // Score every candidate on the same residual window so the AIC values
    // are comparable; orders with longer AR lags condition on more values.
    let start = candidates
        .iter()
        .map(|o| o.ar_degree() + o.diff_degree())
        .max()
        .unwrap_or(0);
    let mut best: Option<(f64, SarimaOrder)> = None;
    for &order in candidates {
        let model = sarima_fit(y, order, opts)?;
        let res = css_residuals(&order, &model.coefficients, y)?;
        let skip = start - (order.ar_degree() + order.diff_degree());
        let window = &res[skip.min(res.len())..];
        let n = window.len() as f64;
        let css: f64 = window.iter().map(|e| e * e).sum();
        let aic = n * (css / n).ln() + 2.0 * (order.n_coefficients() + 1) as f64;
        let better = match best {
            None => true,
            Some((b, bo)) => match aic.total_cmp(&b) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => {
                    (order.n_coefficients(), order) < (bo.n_coefficients(), bo)
                }
            },
        };
        if better {
            best = Some((aic, order));
        }
    }
    Ok(best.unwrap().1)
}
