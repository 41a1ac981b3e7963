//! Constitutive calculus for stress laws with `(p, δ)`-structure.
//!
//! The N-function is `φ(t) = ∫₀ᵗ (δ + s)^{p−2} s ds` and the canonical
//! stress law is `S(P) = μ φ'(|P|)/|P| · P = μ (δ + |P|)^{p−2} P` acting on
//! symmetric tensors. `F(P) = (δ + |P|)^{(p−2)/2} P` carries no `μ`.

mod suite;

pub use suite::{
    equivalence_suite, equivalence_suite_with, write_reports_csv, write_reports_json, RatioReport, RatioWindow,
    SuiteOptions, QUANTITIES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, REL_TOL};
use crate::tensor::{frob_inner_unchecked, sym, FourthOrderTensor, Matrix, SymTensor};

/// Power-law exponent, degeneracy shift and viscosity prefactor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PDeltaParams {
    pub p: f64,
    pub delta: f64,
    pub mu: f64,
    /// Upper end of the shift range used when probing δ-uniformity.
    pub delta0: f64,
}

impl PDeltaParams {
    pub fn new(p: f64, delta: f64, mu: f64) -> Result<Self> {
        Self::with_delta0(p, delta, mu, delta.max(1.0))
    }

    pub fn with_delta0(p: f64, delta: f64, mu: f64, delta0: f64) -> Result<Self> {
        let out = Self { p, delta, mu, delta0 };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(Error::InvalidParameter(format!("p = {} out of (1,2]", self.p)));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta = {} must be >= 0", self.delta)));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu = {} must be > 0", self.mu)));
        }
        if !(self.delta0 >= self.delta) {
            return Err(Error::InvalidParameter(format!(
                "delta0 = {} must be >= delta = {}",
                self.delta0, self.delta
            )));
        }
        Ok(())
    }

    pub fn nfunction(&self) -> NFunction {
        NFunction { p: self.p, delta: self.delta }
    }
}

/// The N-function `φ_{p,δ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NFunction {
    pub p: f64,
    pub delta: f64,
}

fn check_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value < 0.0 || value.is_nan() {
        Err(Error::NegativeArgument { name, value })
    } else {
        Ok(())
    }
}

impl NFunction {
    pub fn new(p: f64, delta: f64) -> Self {
        Self { p, delta }
    }

    /// `φ(t)`, evaluated without cancellation for `t ≪ δ`.
    pub fn phi(&self, t: f64) -> Result<f64> {
        check_nonneg("t", t)?;
        Ok(self.phi_unchecked(t))
    }

    pub(crate) fn phi_unchecked(&self, t: f64) -> f64 {
        let p = self.p;
        if t == 0.0 {
            return 0.0;
        }
        if self.delta == 0.0 {
            return t.powf(p) / p;
        }
        let s = t / self.delta;
        let scaled = if s < 0.5 {
            // ∫₀ˢ (1+σ)^{p−2} σ dσ = Σ_k C(p−2, k) s^{k+2}/(k+2)
            let mut coeff = 1.0;
            let mut power = s * s;
            let mut sum = 0.0;
            for k in 0..200 {
                let term = coeff * power / (k as f64 + 2.0);
                sum += term;
                if term.abs() <= 1e-17 * sum.abs() {
                    break;
                }
                coeff *= (p - 2.0 - k as f64) / (k as f64 + 1.0);
                power *= s;
            }
            sum
        } else {
            let l = s.ln_1p();
            (p * l).exp_m1() / p - ((p - 1.0) * l).exp_m1() / (p - 1.0)
        };
        self.delta.powf(p) * scaled
    }

    /// `φ'(t) = (δ + t)^{p−2} t`; equals 0 at `t = 0`.
    pub fn phi_prime(&self, t: f64) -> Result<f64> {
        check_nonneg("t", t)?;
        Ok(self.phi_prime_unchecked(t))
    }

    pub(crate) fn phi_prime_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            (self.delta + t).powf(self.p - 2.0) * t
        }
    }

    /// `φ''(t) = (δ + t)^{p−3} (δ + (p−1) t)`.
    ///
    /// For `δ = 0`, `p < 2` the value at `t = 0` does not exist and a
    /// `Degenerate` error is returned; see [`Self::phi_second_times_t`] for the
    /// continuously extended product.
    pub fn phi_second(&self, t: f64) -> Result<f64> {
        check_nonneg("t", t)?;
        if self.p == 2.0 {
            return Ok(1.0);
        }
        if self.delta + t == 0.0 {
            return Err(Error::Degenerate("phi'' at t = 0 with delta = 0"));
        }
        Ok(self.phi_second_unchecked(t))
    }

    pub(crate) fn phi_second_unchecked(&self, t: f64) -> f64 {
        if self.p == 2.0 {
            return 1.0;
        }
        let b = self.delta + t;
        b.powf(self.p - 3.0) * (self.delta + (self.p - 1.0) * t)
    }

    /// `φ''(t)·t`, extended by zero at `t = 0`.
    pub fn phi_second_times_t(&self, t: f64) -> Result<f64> {
        check_nonneg("t", t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(self.phi_second_unchecked(t) * t)
    }

    /// Shifted N-function `φ_a(t) = ∫₀ᵗ φ'(a+s) s/(a+s) ds`, by adaptive
    /// Gauss–Kronrod quadrature. The integrand is positive, so the error is
    /// controlled relative to the value (`1e−12·φ_a(t)`) even for tiny `t`.
    pub fn phi_shifted(&self, a: f64, t: f64) -> Result<f64> {
        check_nonneg("a", a)?;
        check_nonneg("t", t)?;
        let integrand = |s: f64| {
            let at = a + s;
            if at == 0.0 {
                0.0
            } else {
                self.phi_prime_unchecked(at) * s / at
            }
        };
        integrate_adaptive(integrand, 0.0, t, f64::MIN_POSITIVE, REL_TOL)
    }

    /// `φ_a'(t) = φ'(a+t) t/(a+t)`.
    pub fn phi_shifted_prime(&self, a: f64, t: f64) -> Result<f64> {
        check_nonneg("a", a)?;
        check_nonneg("t", t)?;
        let at = a + t;
        if at == 0.0 {
            return Ok(0.0);
        }
        Ok(self.phi_prime_unchecked(at) * t / at)
    }
}

/// `φ_{p,δ}(t)` for the parameters' own shift.
pub fn phi(params: &PDeltaParams, t: f64) -> Result<f64> {
    params.nfunction().phi(t)
}

pub fn phi_prime(params: &PDeltaParams, t: f64) -> Result<f64> {
    params.nfunction().phi_prime(t)
}

pub fn phi_second(params: &PDeltaParams, t: f64) -> Result<f64> {
    params.nfunction().phi_second(t)
}

pub fn phi_shifted(params: &PDeltaParams, a: f64, t: f64) -> Result<f64> {
    params.nfunction().phi_shifted(a, t)
}

/// Regularisation applied on top of the base law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    Canonical,
    /// `S^ε(Q) = εQ + S(Q)`.
    EpsPerturbed { eps: f64 },
    /// The base law with the shift `δ` replaced by `κ`.
    KappaRegularized { kappa: f64 },
    /// `S^{ε,κ}(Q) = εQ + S^κ(Q)`.
    EpsKappa { eps: f64, kappa: f64 },
}

/// A member of the canonical stress family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressModel {
    pub base: PDeltaParams,
    pub variant: Variant,
}

impl StressModel {
    pub fn new(base: PDeltaParams, variant: Variant) -> Result<Self> {
        base.validate()?;
        let check_eps = |eps: f64| {
            if eps > 0.0 && eps.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("eps = {eps} must be > 0")))
            }
        };
        let check_kappa = |kappa: f64| {
            if kappa > 0.0 && kappa < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("kappa = {kappa} must lie in (0,1)")))
            }
        };
        match variant {
            Variant::Canonical => {}
            Variant::EpsPerturbed { eps } => check_eps(eps)?,
            Variant::KappaRegularized { kappa } => check_kappa(kappa)?,
            Variant::EpsKappa { eps, kappa } => {
                check_eps(eps)?;
                check_kappa(kappa)?;
            }
        }
        Ok(Self { base, variant })
    }

    pub fn canonical(base: PDeltaParams) -> Self {
        Self { base, variant: Variant::Canonical }
    }

    /// Model with the given `ε ≥ 0` and optional `κ`; `ε = 0` drops the
    /// linear perturbation.
    pub fn regularized(base: PDeltaParams, eps: f64, kappa: Option<f64>) -> Result<Self> {
        let variant = match (eps > 0.0, kappa) {
            (false, None) => Variant::Canonical,
            (true, None) => Variant::EpsPerturbed { eps },
            (false, Some(kappa)) => Variant::KappaRegularized { kappa },
            (true, Some(kappa)) => Variant::EpsKappa { eps, kappa },
        };
        Self::new(base, variant)
    }

    pub fn p(&self) -> f64 {
        self.base.p
    }

    pub fn mu(&self) -> f64 {
        self.base.mu
    }

    pub fn eps(&self) -> f64 {
        match self.variant {
            Variant::EpsPerturbed { eps } | Variant::EpsKappa { eps, .. } => eps,
            _ => 0.0,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match self.variant {
            Variant::KappaRegularized { kappa } | Variant::EpsKappa { kappa, .. } => Some(kappa),
            _ => None,
        }
    }

    /// The effective shift `δ'`: `κ` for regularised variants, else `δ`.
    pub fn shift(&self) -> f64 {
        self.kappa().unwrap_or(self.base.delta)
    }

    /// The N-function `φ_{p,δ'}` of the (possibly regularised) law.
    pub fn nfunction(&self) -> NFunction {
        NFunction { p: self.base.p, delta: self.shift() }
    }

    fn is_linear(&self) -> bool {
        self.base.p == 2.0
    }

    /// `S(P)` for a symmetric argument.
    pub fn stress(&self, p: &SymTensor) -> SymTensor {
        let t = p.norm();
        if t == 0.0 {
            return p.scale(0.0);
        }
        let coeff = self.mu() * (self.shift() + t).powf(self.p() - 2.0) + self.eps();
        p.scale(coeff)
    }

    /// `S(M) = S(sym M)` for a full matrix argument.
    pub fn stress_full(&self, m: &Matrix) -> SymTensor {
        self.stress(&sym(m))
    }

    pub(crate) fn check_nondegenerate(&self, t: f64) -> Result<()> {
        if !self.is_linear() && self.shift() + t == 0.0 {
            Err(Error::Degenerate("stress derivative at the origin with zero shift"))
        } else {
            Ok(())
        }
    }

    /// Scalars `(α, β)` with `∂S(P)[Q] = α Q + β (P̂·Q) P̂`.
    pub(crate) fn jacobian_coefficients(&self, t: f64) -> (f64, f64) {
        let p = self.p();
        let b = self.shift() + t;
        let alpha = self.mu() * b.powf(p - 2.0) + self.eps();
        let beta = if t == 0.0 || self.is_linear() {
            0.0
        } else {
            self.mu() * (p - 2.0) * b.powf(p - 3.0) * t
        };
        (alpha, beta)
    }

    /// Analytic `∂_{kl} S_{ij}(P)`.
    pub fn stress_jacobian(&self, p: &SymTensor) -> Result<FourthOrderTensor> {
        let t = p.norm();
        self.check_nondegenerate(t)?;
        let (alpha, beta) = self.jacobian_coefficients(t);
        let mut out = FourthOrderTensor::zeros(p.dim())?;
        out.add_sym_identity(alpha);
        if beta != 0.0 {
            out.add_outer(beta, &p.scale(1.0 / t));
        }
        Ok(out)
    }

    /// `∂S(Q)[dQ]` without forming the fourth-order tensor.
    pub fn stress_derivative(&self, q: &SymTensor, dq: &SymTensor) -> Result<SymTensor> {
        let t = q.norm();
        self.check_nondegenerate(t)?;
        let (alpha, beta) = self.jacobian_coefficients(t);
        if beta == 0.0 {
            return Ok(dq.scale(alpha));
        }
        let qhat = q.scale(1.0 / t);
        let c = frob_inner_unchecked(&qhat, dq);
        Ok(dq.axpby(alpha, &qhat, beta * c))
    }

    /// `F(P) = (δ' + |P|)^{(p−2)/2} P`.
    pub fn f_map(&self, p: &SymTensor) -> SymTensor {
        let t = p.norm();
        if t == 0.0 {
            return p.scale(0.0);
        }
        p.scale((self.shift() + t).powf(0.5 * (self.p() - 2.0)))
    }

    /// `∂F(Q)[dQ]`.
    pub fn f_map_derivative(&self, q: &SymTensor, dq: &SymTensor) -> Result<SymTensor> {
        let t = q.norm();
        self.check_nondegenerate(t)?;
        let p = self.p();
        let b = self.shift() + t;
        let h = b.powf(0.5 * (p - 2.0));
        if t == 0.0 || self.is_linear() {
            return Ok(dq.scale(h));
        }
        let hprime_t = 0.5 * (p - 2.0) * b.powf(0.5 * (p - 4.0)) * t;
        let qhat = q.scale(1.0 / t);
        let c = frob_inner_unchecked(&qhat, dq);
        Ok(dq.axpby(h, &qhat, hprime_t * c))
    }

    /// `Σ ∂_{kl}S_{mn}(Q) dQ_kl dQ_mn`: the directional quantity `P_i` with
    /// `dQ = ∂_i Q`.
    pub fn p_quantity(&self, q: &SymTensor, dq: &SymTensor) -> Result<f64> {
        if q.dim() != dq.dim() {
            return Err(Error::DimensionMismatch(q.dim(), dq.dim()));
        }
        let ds = self.stress_derivative(q, dq)?;
        Ok(frob_inner_unchecked(&ds, dq))
    }

    /// Potential `μ φ_{p,δ'}(|P|) + (ε/2)|P|²`, whose gradient is `S`.
    pub fn energy_density(&self, p: &SymTensor) -> f64 {
        let t2 = p.norm_sq();
        self.mu() * self.nfunction().phi_unchecked(t2.sqrt()) + 0.5 * self.eps() * t2
    }

    /// Lower coercivity constant of the canonical family, `min(1, p−1)·μ`.
    pub fn kappa0(&self) -> f64 {
        (self.p() - 1.0).min(1.0) * self.mu()
    }

    /// Analytic component bound: `|∂_{kl}S_{ij}(P)| ≤ κ₁ φ''(|P|)` holds with
    /// `κ₁ = μ (3−p)/(p−1)` for the unperturbed family.
    pub fn kappa1_bound(&self) -> f64 {
        self.mu() * (3.0 - self.p()) / (self.p() - 1.0)
    }
}
