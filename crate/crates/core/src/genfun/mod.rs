//! Truncated power series for g_ν, the closed forms of the four named models, the
//! convolution tables f_p(q) and f̃_p(q,l), and the singular expansion near z = 1.

mod relation;
mod series;
mod tables;

pub use relation::{float_fixed_point, solve_nu_gf, solve_nu_minus_gf, solve_with_relation, Relation};
pub use series::{BivariateSeries, Series};
pub use tables::{bivariate_incomplete_binary, f_table, joint_table, joint_table_cap, FTable, JointTable};

use crate::error::{Error, Result};
use crate::model::{Builtin, Displacement, Offspring, TreeModel};
use crate::num::{Rational, Scalar};

/// Closed form of g_ν for a named model, expanded to order `order`.
pub fn closed_form_series<S: Scalar>(model: Builtin, order: usize) -> Result<Series<S>> {
    let d = order + 1;
    let p = |c: &[i64]| Series::<S>::poly(c, d);
    let one_minus_z_cubed = p(&[1, -3, 3, -1]);
    // (radicand constant, numerator polynomial, sqrt multiplier, z-power divided out, denominator)
    let (rad, num, k, shift, den): (i64, Series<S>, i64, usize, Series<S>) = match model {
        Builtin::GeomPm1 => (4, p(&[-4, 9, -2]), 2, 1, p(&[4, -1])),
        Builtin::GeomPm01 => (9, p(&[-3, 6, -1]), 1, 1, p(&[2])),
        Builtin::IncompleteBinary => (49, p(&[-3, 16, -1]), 1, 0, p(&[10, 2])),
        Builtin::CompleteBinary => (25, p(&[-3, 10, -1]), 1, 0, p(&[4, 2])),
    };
    let root = p(&[rad, -1]).mul_trunc(&one_minus_z_cubed).sqrt()?;
    let full = &num + &root.scale(&S::from_i64(k));
    let reduced = full
        .shift_down(shift)
        .map_err(|_| Error::Internal(format!("{} numerator not divisible by z", model.id())))?;
    reduced.truncate(order).div(&den.truncate(order))
}

/// g_ν(1 − w) − 1 and the pieces needed to evaluate it without cancellation:
/// g − 1 = (−D₀ w + β w² + k √(c + w) w^{3/2}) / (D₀ + D₁ w + D₂ w²).
struct WForm {
    d: [f64; 3],
    beta: f64,
    k: f64,
    c: f64,
}

fn w_form(b: Builtin) -> WForm {
    match b {
        Builtin::GeomPm1 => WForm { d: [3.0, -2.0, -1.0], beta: -1.0, k: 2.0, c: 3.0 },
        Builtin::GeomPm01 => WForm { d: [2.0, -2.0, 0.0], beta: -1.0, k: 1.0, c: 8.0 },
        Builtin::IncompleteBinary => WForm { d: [12.0, -2.0, 0.0], beta: -1.0, k: 1.0, c: 48.0 },
        Builtin::CompleteBinary => WForm { d: [6.0, -2.0, 0.0], beta: -1.0, k: 1.0, c: 24.0 },
    }
}

impl WForm {
    fn den(&self, w: f64) -> f64 {
        self.d[0] + self.d[1] * w + self.d[2] * w * w
    }

    /// (g − 1 + w) / w^{3/2}
    fn quotient(&self, w: f64) -> f64 {
        let s = w.sqrt();
        (self.k * (self.c + w).sqrt() + (self.beta + self.d[1]) * s + self.d[2] * w * s) / self.den(w)
    }

    /// (g − 1) / w
    fn linear(&self, w: f64) -> f64 {
        (-self.d[0] + self.beta * w + self.k * (self.c + w).sqrt() * w.sqrt()) / self.den(w)
    }
}

fn check_w(z: &Rational) -> Result<f64> {
    let w = Scalar::to_f64(&(Rational::from_integer(1.into()) - z));
    if !(w > 0.0 && w < 0.01) {
        return Err(Error::Domain("evaluation point must lie in (0.99, 1)".into()));
    }
    Ok(w)
}

/// The literal quotient (g(z) − 1 + (1−z)) / (1−z)^{3/2}.
pub fn raw_singular_quotient(b: Builtin, z: &Rational) -> Result<f64> {
    Ok(w_form(b).quotient(check_w(z)?))
}

/// Estimate of the (1−z)^{3/2} coefficient at z, for any named model. One Richardson step
/// 2A(w/4) − A(w) removes the √w correction of the quotient A.
pub fn measured_singular_coefficient(b: Builtin, z: &Rational) -> Result<f64> {
    let w = check_w(z)?;
    let f = w_form(b);
    Ok(2.0 * f.quotient(w / 4.0) - f.quotient(w))
}

/// The (1−z)^{3/2} coefficient estimate at z, for the two models with iid displacements.
pub fn singular_coefficient(model: &TreeModel, z: &Rational) -> Result<f64> {
    match model.builtin {
        Some(b @ (Builtin::GeomPm1 | Builtin::GeomPm01)) => measured_singular_coefficient(b, z),
        _ => Err(Error::Unsupported(format!(
            "{}: the singular coefficient is only predicted for iid displacements",
            model.name()
        ))),
    }
}

/// Estimate of lim (g(z) − 1)/(1 − z), same Richardson step as above.
pub fn linear_coefficient(b: Builtin, z: &Rational) -> Result<f64> {
    let w = check_w(z)?;
    let f = w_form(b);
    Ok(2.0 * f.linear(w / 4.0) - f.linear(w))
}

/// Raw (g(z) − 1)/(1 − z).
pub fn raw_linear_quotient(b: Builtin, z: &Rational) -> Result<f64> {
    Ok(w_form(b).linear(check_w(z)?))
}

/// √(2/3) σ_ξ / σ_η for geometric offspring with iid displacements.
pub fn predicted_singular_coefficient(model: &TreeModel) -> Result<f64> {
    let sigma_xi2 = match &model.offspring {
        Offspring::GeometricHalf => 2.0,
        Offspring::Geometric(p) => {
            let p = Scalar::to_f64(p);
            (1.0 - p) / (p * p)
        }
        Offspring::Table(_) => {
            let mean = Scalar::to_f64(&model.mean_offspring());
            let top = model.max_arity().unwrap_or(0);
            (0..=top)
                .map(|k| Scalar::to_f64(&model.xi(k)) * (k as f64 - mean).powi(2))
                .sum()
        }
    };
    let sigma_eta2: f64 = match model.displacement {
        Displacement::IidPm1 => 1.0,
        Displacement::IidPm01 => 2.0 / 3.0,
        Displacement::PerArity(_) => {
            return Err(Error::Unsupported("σ_η is not defined for per-arity displacement laws".into()))
        }
    };
    Ok((2.0f64 / 3.0).sqrt() * sigma_xi2.sqrt() / sigma_eta2.sqrt())
}
