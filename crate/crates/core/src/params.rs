//! Parameter sets, validation and the named-set registry.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::galois::MAX_DEGREE;
use crate::lrpc::CodeStructure;

/// Environment variable naming a directory of `<name>.params` files.
pub const PARAM_DIR_ENV: &str = "MCNIE_PARAM_DIR";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("unknown parameter set `{0}`")]
    Unknown(String),
    #[error("cannot parse parameter spec: {0}")]
    Syntax(String),
    #[error("parameter set `{name}` is invalid: {}", violations.join("; "))]
    Invalid { name: String, violations: Vec<String> },
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

/// Key layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    General,
    Qc3,
    Qc4,
}

impl Variant {
    pub fn code_structure(self) -> CodeStructure {
        match self {
            Variant::General => CodeStructure::Dense,
            Variant::Qc3 => CodeStructure::Qc3,
            Variant::Qc4 => CodeStructure::Qc4,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Variant::General => 0,
            Variant::Qc3 => 1,
            Variant::Qc4 => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Variant::General),
            1 => Some(Variant::Qc3),
            2 => Some(Variant::Qc4),
            _ => None,
        }
    }

    /// Circulant block size for QC layouts.
    pub fn block_size(self, n: usize) -> Option<usize> {
        match self {
            Variant::General => None,
            Variant::Qc3 => Some(n / 3),
            Variant::Qc4 => Some(n / 4),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::General => "general",
            Variant::Qc3 => "qc3",
            Variant::Qc4 => "qc4",
        })
    }
}

impl FromStr for Variant {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" | "dense" => Ok(Variant::General),
            "qc3" => Ok(Variant::Qc3),
            "qc4" => Ok(Variant::Qc4),
            other => Err(ParamError::Syntax(format!("unknown variant `{other}`"))),
        }
    }
}

/// A McNie parameter set over GF(2^m) (q = 2).
///
/// `k` is the dimension of the secret LRPC code, so `H` has `n - k` rows;
/// `l` is the dimension of the public code generated by `G'`.
///
/// Equality ignores `name`.
#[derive(Clone, Debug)]
pub struct ParamSet {
    pub name: String,
    pub m: u32,
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub d: usize,
    pub r: usize,
    pub variant: Variant,
}

impl ParamSet {
    fn key(&self) -> (u32, usize, usize, usize, usize, usize, Variant) {
        (self.m, self.n, self.l, self.k, self.d, self.r, self.variant)
    }

    /// Redundancy `n - k`.
    pub fn nk(&self) -> usize {
        self.n.saturating_sub(self.k)
    }

    /// Parses `name`, a `custom:` spec, or a file from [`PARAM_DIR_ENV`].
    pub fn resolve(spec: &str) -> Result<Self, ParamError> {
        if let Some(body) = spec.strip_prefix("custom:") {
            return Self::parse_custom(body);
        }
        if let Some(named) = NamedSet::by_name(spec) {
            return Ok(named.params());
        }
        if let Ok(dir) = std::env::var(PARAM_DIR_ENV) {
            let path = Path::new(&dir).join(format!("{spec}.params"));
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|e| ParamError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                let mut p = Self::parse_file(&text)?;
                p.name = spec.to_string();
                return Ok(p);
            }
        }
        Err(ParamError::Unknown(spec.to_string()))
    }

    /// Parses `n=24,m=11,nk=8,d=2,r=3,variant=qc3`.
    ///
    /// QC variants derive `l` from `n`; the general variant needs `l`.
    /// Either `nk` or `k` may be given.
    pub fn parse_custom(body: &str) -> Result<Self, ParamError> {
        let mut p = Self::from_pairs(body.split(',').map(str::trim).filter(|s| !s.is_empty()))?;
        p.name = p.canonical_name();
        Ok(p)
    }

    /// `custom:` spec that reproduces this set.
    pub fn canonical_name(&self) -> String {
        format!(
            "custom:n={},m={},nk={},l={},d={},r={},variant={}",
            self.n,
            self.m,
            self.nk(),
            self.l,
            self.d,
            self.r,
            self.variant
        )
    }

    /// Parses a `key = value` file, one entry per line, `#` comments allowed.
    pub fn parse_file(text: &str) -> Result<Self, ParamError> {
        let lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let mut p = Self::from_pairs(lines)?;
        p.name = p.canonical_name();
        Ok(p)
    }

    fn from_pairs<'a>(pairs: impl Iterator<Item = &'a str>) -> Result<Self, ParamError> {
        let (mut n, mut m, mut nk, mut k, mut l, mut d, mut r) = (None, None, None, None, None, None, None);
        let mut variant = Variant::General;
        for pair in pairs {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| ParamError::Syntax(format!("expected key=value, got `{pair}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "variant" {
                variant = value.parse()?;
                continue;
            }
            let num: usize = value
                .parse()
                .map_err(|_| ParamError::Syntax(format!("`{key}` must be a non-negative integer, got `{value}`")))?;
            let slot = match key {
                "n" => &mut n,
                "m" => &mut m,
                "nk" => &mut nk,
                "k" => &mut k,
                "l" => &mut l,
                "d" => &mut d,
                "r" => &mut r,
                other => return Err(ParamError::Syntax(format!("unknown key `{other}`"))),
            };
            *slot = Some(num);
        }
        let need = |v: Option<usize>, key: &str| v.ok_or_else(|| ParamError::Syntax(format!("missing `{key}`")));
        let n = need(n, "n")?;
        let m = need(m, "m")?;
        let d = need(d, "d")?;
        let r = need(r, "r")?;
        let k = match (k, nk) {
            (Some(k), None) => k,
            (None, Some(nk)) if nk <= n => n - nk,
            (Some(k), Some(nk)) if k + nk == n => k,
            (None, None) => return Err(ParamError::Syntax("missing `nk` (or `k`)".into())),
            _ => return Err(ParamError::Syntax("`k` and `nk` disagree with `n`".into())),
        };
        let l = match (l, variant) {
            (Some(l), _) => l,
            (None, Variant::Qc3) => 2 * n / 3,
            (None, Variant::Qc4) => 3 * n / 4,
            (None, Variant::General) => return Err(ParamError::Syntax("general variant needs `l`".into())),
        };
        let m = u32::try_from(m).map_err(|_| ParamError::Syntax("`m` too large".into()))?;
        Ok(ParamSet {
            name: String::new(),
            m,
            n,
            l,
            k,
            d,
            r,
            variant,
        })
    }

    /// Like [`validate_params`], but turns violations into an error.
    pub fn checked(self) -> Result<Self, ParamError> {
        let report = validate_params(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(ParamError::Invalid {
                name: self.name,
                violations: report.violations,
            })
        }
    }

    /// Registry id when this is one of the named sets, else 0.
    pub fn registry_id(&self) -> u8 {
        NamedSet::all()
            .iter()
            .find(|s| s.params() == *self)
            .map_or(0, |s| s.id)
    }
}

impl PartialEq for ParamSet {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for ParamSet {}

impl std::hash::Hash for ParamSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (variant={}, n={}, l={}, k={}, n-k={}, d={}, r={}, m={})",
            self.name,
            self.variant,
            self.n,
            self.l,
            self.k,
            self.nk(),
            self.d,
            self.r,
            self.m
        )
    }
}

/// Result of [`validate_params`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamReport {
    /// Conditions that make the set unusable.
    pub violations: Vec<String>,
    /// Conditions that are allowed but degrade decryption or security.
    pub advisories: Vec<String>,
    /// `m (n - l)(n - k)`: log_2 of the number of `H0` choices giving the same `F`.
    pub h0_choices_exponent: u128,
}

impl ParamReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the structural constraints of a parameter set.
pub fn validate_params(p: &ParamSet) -> ParamReport {
    let mut violations = Vec::new();
    let mut advisories = Vec::new();
    if p.m < 2 || p.m > MAX_DEGREE {
        violations.push(format!("m = {} has no supported modulus (need 2 <= m <= {MAX_DEGREE})", p.m));
    }
    if p.n < 2 {
        violations.push("n must be at least 2".into());
    }
    if p.k >= p.n {
        violations.push(format!("k = {} must be below n = {}", p.k, p.n));
    }
    let nk = p.n.saturating_sub(p.k);
    if p.l <= nk {
        violations.push(format!("l must exceed n-k (l = {}, n-k = {nk})", p.l));
    }
    if p.l > p.n {
        violations.push(format!("l = {} exceeds n = {}", p.l, p.n));
    }
    if p.d == 0 || p.d as u64 > u64::from(p.m) {
        violations.push(format!("d = {} outside 1..=m", p.d));
    }
    if p.r * p.d > nk {
        violations.push(format!("r*d = {} exceeds n-k = {nk}", p.r * p.d));
    }
    if p.r > p.n || p.r as u64 > u64::from(p.m) {
        violations.push(format!("r = {} exceeds min(n, m)", p.r));
    }
    for (key, v) in [("n", p.n), ("l", p.l), ("k", p.k), ("d", p.d), ("r", p.r)] {
        if v > u16::MAX as usize {
            violations.push(format!("{key} = {v} does not fit the 16-bit header field"));
        }
    }
    match p.variant {
        Variant::General => {}
        Variant::Qc3 => {
            if p.n % 3 != 0 || nk != p.n / 3 || p.l != 2 * p.n / 3 {
                violations.push("qc3 requires 3 | n, n-k = n/3 and l = 2n/3".into());
            }
        }
        Variant::Qc4 => {
            if p.n % 4 != 0 || nk != p.n / 2 || p.l != 3 * p.n / 4 {
                violations.push("qc4 requires 4 | n, n-k = n/2 and l = 3n/4".into());
            }
        }
    }
    if p.d == 1 {
        advisories.push("d = 1 makes H a binary matrix".into());
    }
    if p.r == 0 {
        advisories.push("r = 0: ciphertexts carry no error".into());
    }
    if (p.r * p.d) as u64 > u64::from(p.m) {
        advisories.push(format!("m = {} is below r*d = {}: product space cannot reach full dimension", p.m, p.r * p.d));
    }
    if nk * p.d < p.n {
        advisories.push(format!(
            "(n-k)*d = {} is below n = {}: the decoding system is underdetermined and decryption cannot identify e",
            nk * p.d,
            p.n
        ));
    }
    ParamReport {
        violations,
        advisories,
        h0_choices_exponent: u128::from(p.m) * (p.n.saturating_sub(p.l) as u128) * nk as u128,
    }
}

/// One of the six published parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NamedSet {
    pub id: u8,
    pub name: &'static str,
    pub variant: Variant,
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub d: usize,
    pub r: usize,
    pub m: u32,
    /// Published public-key size in bytes.
    pub public_key_bytes: usize,
    /// Published failure exponent (as a power of 2).
    pub table_failure_exponent: i32,
    pub security_bits: u32,
}

const NAMED: [NamedSet; 6] = [
    NamedSet { id: 1, name: "qc3-128", variant: Variant::Qc3, n: 120, l: 80, k: 80, d: 3, r: 8, m: 53, public_key_bytes: 795, table_failure_exponent: -23, security_bits: 128 },
    NamedSet { id: 2, name: "qc3-192", variant: Variant::Qc3, n: 138, l: 92, k: 92, d: 3, r: 10, m: 67, public_key_bytes: 1156, table_failure_exponent: -25, security_bits: 192 },
    NamedSet { id: 3, name: "qc3-256", variant: Variant::Qc3, n: 156, l: 104, k: 104, d: 3, r: 12, m: 71, public_key_bytes: 1385, table_failure_exponent: -27, security_bits: 256 },
    // the 4QC shapes need l = 3n/4 and k = n/2
    NamedSet { id: 4, name: "qc4-128", variant: Variant::Qc4, n: 92, l: 69, k: 46, d: 3, r: 10, m: 59, public_key_bytes: 849, table_failure_exponent: -36, security_bits: 128 },
    NamedSet { id: 5, name: "qc4-192", variant: Variant::Qc4, n: 112, l: 84, k: 56, d: 3, r: 13, m: 67, public_key_bytes: 1173, table_failure_exponent: -38, security_bits: 192 },
    NamedSet { id: 6, name: "qc4-256", variant: Variant::Qc4, n: 128, l: 96, k: 64, d: 3, r: 16, m: 73, public_key_bytes: 1460, table_failure_exponent: -36, security_bits: 256 },
];

impl NamedSet {
    pub fn all() -> &'static [NamedSet] {
        &NAMED
    }

    pub fn by_name(name: &str) -> Option<&'static NamedSet> {
        NAMED.iter().find(|s| s.name == name)
    }

    pub fn by_id(id: u8) -> Option<&'static NamedSet> {
        NAMED.iter().find(|s| s.id == id)
    }

    pub fn params(&self) -> ParamSet {
        ParamSet {
            name: self.name.to_string(),
            m: self.m,
            n: self.n,
            l: self.l,
            k: self.k,
            d: self.d,
            r: self.r,
            variant: self.variant,
        }
    }
}
