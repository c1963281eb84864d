//! Attack-cost estimates for McNie parameter sets.
//!
//! Recovering the message is modelled as four rank syndrome decoding (RSD)
//! instances `(n, k, r)`: the code of `G'` against `c1`, the code of `F`
//! against `c2`, the stacked code against `(c1, c2)`, and the `G'` code
//! reduced to dimension `l - (n - k)` by the known message-recovery
//! reduction. Each instance is priced with the combinatorial bound
//! `(n-k)^3 m^3 q^(r(k+1)m/n - m)` and the algebraic bound
//! `r^3 k^3 q^(r ceil(((r+1)(k+1) - (n+1)) / r))`.

use std::fmt::{self, Write as _};

use num_bigint::BigUint;

use crate::params::{validate_params, ParamReport, ParamSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstanceLabel {
    C1,
    C2,
    Joint,
    C1Reduced,
}

impl fmt::Display for InstanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceLabel::C1 => "c1",
            InstanceLabel::C2 => "c2",
            InstanceLabel::Joint => "joint",
            InstanceLabel::C1Reduced => "c1_reduced",
        })
    }
}

/// An RSD instance: find `x` of rank `r` in a code of length `n`, dimension `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RsdInstance {
    pub label: InstanceLabel,
    pub n: usize,
    pub k: usize,
    pub r: usize,
}

impl RsdInstance {
    pub fn triple(&self) -> (usize, usize, usize) {
        (self.n, self.k, self.r)
    }
}

/// The four instances: `c1 (n, l, r)`, `c2 (l, l-(n-k), r)`,
/// `joint (2n-k, l, r)` and `c1_reduced (n, l-(n-k), r)`.
pub fn rsd_instances(p: &ParamSet) -> [RsdInstance; 4] {
    let nk = p.nk();
    let reduced = p.l.saturating_sub(nk);
    let r = p.r;
    [
        RsdInstance { label: InstanceLabel::C1, n: p.n, k: p.l, r },
        RsdInstance { label: InstanceLabel::C2, n: p.l, k: reduced, r },
        RsdInstance { label: InstanceLabel::Joint, n: 2 * p.n - p.k, k: p.l, r },
        RsdInstance { label: InstanceLabel::C1Reduced, n: p.n, k: reduced, r },
    ]
}

/// log2 of `(n-k)^3 m^3 q^(r(k+1)m/n - m)` with a real-valued exponent.
pub fn comb_complexity(inst: &RsdInstance, m: u32, q: u32) -> f64 {
    let (n, k, r, m) = (inst.n as f64, inst.k as f64, inst.r as f64, f64::from(m));
    3.0 * (n - k).log2() + 3.0 * m.log2() + (r * (k + 1.0) * m / n - m) * f64::from(q).log2()
}

/// As [`comb_complexity`] with the exponent `r ceil((k+1)m/n) - m`.
pub fn comb_complexity_ceiled(inst: &RsdInstance, m: u32, q: u32) -> f64 {
    let (n, k, r) = (inst.n as f64, inst.k as f64, inst.r as f64);
    let mf = f64::from(m);
    let ceil = ((inst.k as u64 + 1) * u64::from(m)).div_ceil(inst.n as u64) as f64;
    3.0 * (n - k).log2() + 3.0 * mf.log2() + (r * ceil - mf) * f64::from(q).log2()
}

/// Result of [`alg_complexity`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgEstimate {
    pub log2: f64,
    /// The exponent vanished: the bound is polynomial.
    pub polynomial: bool,
}

fn ceil_div(a: i64, b: i64) -> i64 {
    let q = a.div_euclid(b);
    if a.rem_euclid(b) == 0 {
        q
    } else {
        q + 1
    }
}

/// log2 of `r^3 k^3 q^(r ceil(((r+1)(k+1) - (n+1)) / r))`.
///
/// A non-positive ceiling (or `k = 0`) drops the exponential factor and sets
/// the polynomial flag; `k = 0` also drops the `k^3` factor.
pub fn alg_complexity(inst: &RsdInstance, q: u32) -> AlgEstimate {
    let (n, k, r) = (inst.n as i64, inst.k as i64, inst.r as i64);
    let poly = 3.0 * (r.max(1) as f64).log2() + 3.0 * (k.max(1) as f64).log2();
    if k == 0 || r == 0 {
        return AlgEstimate {
            log2: poly,
            polynomial: true,
        };
    }
    let c = ceil_div((r + 1) * (k + 1) - (n + 1), r);
    if c <= 0 {
        return AlgEstimate {
            log2: poly,
            polynomial: true,
        };
    }
    AlgEstimate {
        log2: poly + (r * c) as f64 * f64::from(q).log2(),
        polynomial: false,
    }
}

/// Exact Gaussian binomial `[m choose r]_q` by the product formula.
pub fn gaussian_binomial(m: u32, r: u32, q: u32) -> BigUint {
    if r > m {
        return BigUint::from(0u32);
    }
    let q = BigUint::from(q);
    let one = BigUint::from(1u32);
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for i in 0..r {
        num *= q.pow(m - i) - &one;
        den *= q.pow(i + 1) - &one;
    }
    num / den
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Comb,
    CombCeiled,
    Alg,
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formula::Comb => "comb",
            Formula::CombCeiled => "comb_ceiled",
            Formula::Alg => "alg",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportEntry {
    pub instance: RsdInstance,
    pub formula: Formula,
    pub log2: f64,
    pub polynomial: bool,
    /// Whether this entry takes part in the minimum.
    pub counted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecurityReport {
    pub params: ParamSet,
    pub target_bits: f64,
    pub include_reduced: bool,
    pub entries: Vec<ReportEntry>,
    /// Minimum over the counted printed-formula entries.
    pub minimum: f64,
    pub structure: ParamReport,
    /// `m (l - rank F)`: log_q of the solutions of `m F = c2`.
    pub f_solutions_exponent_m: u64,
    /// `l - rank F`, the same count without the factor `m`.
    pub f_solutions_exponent: u64,
    /// `m (n - l)(n - k)`: log_q of the `H0` choices yielding one `F`.
    pub h0_choices_exponent: u128,
}

impl SecurityReport {
    pub fn passes(&self) -> bool {
        self.structure.is_valid() && self.minimum >= self.target_bits
    }

    /// `formula.label = value` lines plus summary keys.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "params = {}", self.params.name);
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{}.{} = {:.6}{}",
                e.formula,
                e.instance.label,
                e.log2,
                if e.polynomial { " polynomial" } else { "" }
            );
        }
        let _ = writeln!(out, "minimum = {:.6}", self.minimum);
        let _ = writeln!(out, "target = {}", self.target_bits);
        let _ = writeln!(out, "include_reduced = {}", self.include_reduced);
        let _ = writeln!(out, "f_solutions.exponent_m = {}", self.f_solutions_exponent_m);
        let _ = writeln!(out, "f_solutions.exponent = {}", self.f_solutions_exponent);
        let _ = writeln!(out, "h0_choices.exponent = {}", self.h0_choices_exponent);
        for v in &self.structure.violations {
            let _ = writeln!(out, "violation = {v}");
        }
        for a in &self.structure.advisories {
            let _ = writeln!(out, "advisory = {a}");
        }
        let _ = writeln!(out, "pass = {}", self.passes());
        out
    }
}

impl fmt::Display for SecurityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "security estimate for {}", self.params)?;
        writeln!(f, "{:<11} {:>14} {:>10} {:>12} {:>10}", "instance", "(n, k, r)", "comb", "comb_ceiled", "alg")?;
        for inst in rsd_instances(&self.params) {
            let get = |formula| {
                self.entries
                    .iter()
                    .find(|e| e.instance == inst && e.formula == formula)
                    .expect("every instance has every formula")
            };
            let alg = get(Formula::Alg);
            let (n, k, r) = inst.triple();
            writeln!(
                f,
                "{:<11} {:>14} {:>10.2} {:>12.2} {:>9.2}{}{}",
                inst.label.to_string(),
                format!("({n}, {k}, {r})"),
                get(Formula::Comb).log2,
                get(Formula::CombCeiled).log2,
                alg.log2,
                if alg.polynomial { "p" } else { " " },
                if get(Formula::Comb).counted { "" } else { "  (excluded)" }
            )?;
        }
        writeln!(f, "minimum: {:.2} bits (target {})", self.minimum, self.target_bits)?;
        writeln!(
            f,
            "solutions of m F = c2: q^{} (or q^{} without the factor m)",
            self.f_solutions_exponent_m, self.f_solutions_exponent
        )?;
        writeln!(f, "H0 choices per F: q^{}", self.h0_choices_exponent)?;
        for v in &self.structure.violations {
            writeln!(f, "violation: {v}")?;
        }
        for a in &self.structure.advisories {
            writeln!(f, "advisory: {a}")?;
        }
        write!(f, "result: {}", if self.passes() { "PASS" } else { "FAIL" })
    }
}

/// Prices all four instances and compares the minimum with `target_bits`.
///
/// With `include_reduced = false` the reduced instance is listed but left
/// out of the minimum.
pub fn audit(params: &ParamSet, target_bits: f64, include_reduced: bool) -> SecurityReport {
    const Q: u32 = 2;
    let mut entries = Vec::new();
    for inst in rsd_instances(params) {
        let counted = include_reduced || inst.label != InstanceLabel::C1Reduced;
        let alg = alg_complexity(&inst, Q);
        entries.push(ReportEntry {
            instance: inst,
            formula: Formula::Comb,
            log2: comb_complexity(&inst, params.m, Q),
            polynomial: false,
            counted,
        });
        entries.push(ReportEntry {
            instance: inst,
            formula: Formula::CombCeiled,
            log2: comb_complexity_ceiled(&inst, params.m, Q),
            polynomial: false,
            counted: false,
        });
        entries.push(ReportEntry {
            instance: inst,
            formula: Formula::Alg,
            log2: alg.log2,
            polynomial: alg.polynomial,
            counted,
        });
    }
    let minimum = entries
        .iter()
        .filter(|e| e.counted)
        .map(|e| e.log2)
        .fold(f64::INFINITY, f64::min);
    // F has full column rank n - k by construction
    let free = params.l.saturating_sub(params.nk()) as u64;
    SecurityReport {
        params: params.clone(),
        target_bits,
        include_reduced,
        entries,
        minimum,
        structure: validate_params(params),
        f_solutions_exponent_m: u64::from(params.m) * free,
        f_solutions_exponent: free,
        h0_choices_exponent: validate_params(params).h0_choices_exponent,
    }
}
