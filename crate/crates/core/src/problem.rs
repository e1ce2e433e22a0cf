//! JSON problem files: model, truncation, field and task parameters.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "model": { "builder": "dim6", "zeta1": 1.4142135623730951, "zeta2": 1.7320508075688772 },
//!   "truncation": { "degree_cutoff": 6, "arithmetic": "exact" },
//!   "field": { "seed": 3 },
//!   "tasks": { "tau": 2.0, "degree_bound": 6 }
//! }
//! ```
//!
//! Unknown keys are rejected at every level.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::builders::{
    build_example_dim6, build_example_hyperbolic, build_example_nls, default_potential, intro4_model, Kind,
};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::frequency::{FrequencyModel, Symbol};
use crate::index::{ModeKey, ModeSet, TruncationContext};
use crate::normalform::KamConfig;
use crate::scalar::{parse_rational, GaussRational, Scalar};
use crate::text::field_from_text;
use crate::verify::FlowConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Exact,
    Float,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub name: String,
    /// Floating value; exact arithmetic uses a close rational in its place.
    #[serde(default)]
    pub value: Option<f64>,
    /// Exact rational such as `"3/2"`.
    #[serde(default)]
    pub exact: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "builder", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Dim6 {
        zeta1: f64,
        zeta2: f64,
    },
    Intro4 {
        zeta: f64,
    },
    Nls {
        p: u32,
        /// `j -> V_j` as rational strings; defaults to a fixed generic potential.
        #[serde(default)]
        potential: Option<BTreeMap<i32, String>>,
    },
    Hyperbolic {
        #[serde(default)]
        potential: Option<BTreeMap<i32, String>>,
        /// Indices `j` that stay elliptic; all others are hyperbolic.
        #[serde(default)]
        elliptic: Vec<i32>,
    },
    Explicit {
        symbols: Vec<SymbolSpec>,
        /// Mode key to coordinates over the symbols, each a coefficient string.
        lambda: BTreeMap<String, Vec<String>>,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Dim6 { .. } => "dim6",
            ModelSpec::Intro4 { .. } => "intro4",
            ModelSpec::Nls { .. } => "nls",
            ModelSpec::Hyperbolic { .. } => "hyperbolic",
            ModelSpec::Explicit { .. } => "explicit",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub degree_cutoff: u32,
    /// Lattice cutoff `N`; fixed by the model for finite builders.
    #[serde(default)]
    pub mode_cutoff: Option<u32>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub momentum: Option<bool>,
    #[serde(default)]
    pub arithmetic: Arithmetic,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// Builder seed; 0 gives the bare builder output (`D(λ)` for dim6).
    #[serde(default)]
    pub seed: u64,
    /// Whole field in canonical text form, relative to the problem file.
    #[serde(default)]
    pub file: Option<String>,
    /// Extra canonical-text lines added on top.
    #[serde(default)]
    pub extra_terms: Vec<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub blowup: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KamSpec {
    #[serde(default)]
    pub m_star: Option<u32>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub r_prime: Option<f64>,
    #[serde(default)]
    pub s0: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub k1: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub big_c: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub degree_bound: Option<u32>,
    #[serde(default)]
    pub flow: FlowSpec,
    #[serde(default)]
    pub rhos: Option<Vec<f64>>,
    /// Seed for the verification directions.
    #[serde(default)]
    pub direction_seed: Option<u64>,
    #[serde(default)]
    pub kam: KamSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub truncation: TruncationSpec,
    #[serde(default)]
    pub field: FieldSpec,
    #[serde(default)]
    pub tasks: TaskSpec,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let p: ProblemFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), msg: format!("column {}: {e}", e.column()) })?;
        if p.schema_version != SCHEMA_VERSION {
            return Err(Error::Input(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                p.schema_version
            )));
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::parse(&text)?, base))
    }
}

/// Everything a command needs, resolved from a problem file.
#[derive(Clone, Debug)]
pub struct Setup {
    pub problem: ProblemFile,
    pub ctx: TruncationContext,
    pub model: FrequencyModel,
    pub arithmetic: Arithmetic,
    pub seed: u64,
    builder_field: VectorField<GaussRational>,
    file_text: Option<String>,
}

fn potential(spec: &Option<BTreeMap<i32, String>>, n: u32) -> Result<BTreeMap<i32, BigRational>> {
    match spec {
        None => Ok(default_potential(n)),
        Some(m) => {
            let mut out = BTreeMap::new();
            for j in -(n as i32)..=(n as i32) {
                let s = m.get(&j).ok_or_else(|| Error::Input(format!("potential misses j = {j}")))?;
                out.insert(j, parse_rational(s)?);
            }
            Ok(out)
        }
    }
}

fn explicit_model(symbols: &[SymbolSpec], lambda: &BTreeMap<String, Vec<String>>) -> Result<(FrequencyModel, ModeSet)> {
    let mut syms = Vec::new();
    for s in symbols {
        let sym = match (&s.value, &s.exact) {
            (Some(v), None) => Symbol::new(&s.name, *v),
            (None, Some(e)) => Symbol::exact(&s.name, parse_rational(e)?),
            _ => return Err(Error::Input(format!("symbol '{}' needs exactly one of value, exact", s.name))),
        };
        syms.push(sym);
    }
    let mut map = BTreeMap::new();
    for (k, coords) in lambda {
        let key: ModeKey = k.parse()?;
        if coords.len() != syms.len() {
            return Err(Error::Input(format!("mode {k}: {} coordinates for {} symbols", coords.len(), syms.len())));
        }
        let c = coords.iter().map(|s| GaussRational::parse_text(s)).collect::<Result<Vec<_>>>()?;
        map.insert(key, c);
    }
    let keys: Vec<ModeKey> = map.keys().copied().collect();
    let set = if keys.iter().all(|k| k.is_plain()) {
        let n = keys.len() as u32;
        if keys != (1..=n).map(ModeKey::index).collect::<Vec<_>>() {
            return Err(Error::Input("plain modes must be 1..n without gaps".into()));
        }
        ModeSet::Finite(n)
    } else {
        let n = keys.iter().map(|k| k.j().unsigned_abs()).max().unwrap_or(0);
        ModeSet::Lattice(n)
    };
    Ok((FrequencyModel::new(syms, map)?, set))
}

impl Setup {
    /// Resolve a problem. `seed` and `arithmetic` override the file values.
    pub fn new(problem: ProblemFile, base: &Path, seed: Option<u64>, arithmetic: Option<Arithmetic>) -> Result<Self> {
        let t = &problem.truncation;
        let d = t.degree_cutoff;
        let seed = seed.unwrap_or(problem.field.seed);
        let need_n = || t.mode_cutoff.ok_or_else(|| Error::Input("this model needs truncation.mode_cutoff".into()));
        let fixed = |n: u32| match t.mode_cutoff {
            Some(m) if m != n => Err(Error::Input(format!("mode_cutoff {m} does not match the model dimension {n}"))),
            _ => Ok(()),
        };
        let (model, mut ctx, field) = match &problem.model {
            ModelSpec::Dim6 { zeta1, zeta2 } => {
                fixed(6)?;
                let (w, m) = build_example_dim6(*zeta1, *zeta2, seed, d)?;
                (m, *w.ctx(), Some(w))
            }
            ModelSpec::Intro4 { zeta } => {
                fixed(4)?;
                (intro4_model(*zeta)?, TruncationContext::finite(4, d), None)
            }
            ModelSpec::Nls { p, potential: v } => {
                let n = need_n()?;
                let (w, m) = build_example_nls(*p, &potential(v, n)?, n, d)?;
                (m, *w.ctx(), Some(w))
            }
            ModelSpec::Hyperbolic { potential: v, elliptic } => {
                let n = need_n()?;
                let ell = elliptic.clone();
                let kinds = move |j: i32| if ell.contains(&j) { Kind::Elliptic } else { Kind::Hyperbolic };
                let (w, m) = build_example_hyperbolic(&potential(v, n)?, n, d, seed, &kinds)?;
                (m, *w.ctx(), Some(w))
            }
            ModelSpec::Explicit { symbols, lambda } => {
                let (m, set) = explicit_model(symbols, lambda)?;
                let ctx = match set {
                    ModeSet::Finite(n) => {
                        fixed(n)?;
                        TruncationContext::finite(n, d)
                    }
                    ModeSet::Lattice(n) => {
                        fixed(n)?;
                        TruncationContext::lattice(n, d)
                    }
                };
                (m, ctx, None)
            }
        };
        if let Some(th) = t.theta {
            ctx = ctx.with_theta(th);
        }
        if let Some(mo) = t.momentum {
            ctx = ctx.with_momentum(mo);
        }
        ctx.validate()?;
        model.check_context(&ctx)?;
        let builder_field = match field {
            // rebuild in the adjusted context
            Some(w) => {
                let mut out = VectorField::new(ctx);
                for ((k, q), c) in w.terms() {
                    out.insert(*k, q.clone(), c.clone())?;
                }
                out
            }
            None => VectorField::linear(ctx, &model.linear_terms(&ctx)?)?,
        };
        let file_text = match &problem.field.file {
            Some(f) => {
                let path = base.join(f);
                Some(std::fs::read_to_string(&path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?)
            }
            None => None,
        };
        let arithmetic = arithmetic.unwrap_or(t.arithmetic);
        Ok(Setup { problem, ctx, model, arithmetic, seed, builder_field, file_text })
    }

    /// The input field `W0` in the requested arithmetic.
    pub fn field<C: Scalar>(&self) -> Result<VectorField<C>> {
        let mut w = match &self.file_text {
            Some(text) => field_from_text::<C>(self.ctx, text)?,
            None => self.builder_field.convert(C::from_gauss),
        };
        if !self.problem.field.extra_terms.is_empty() {
            let extra = field_from_text::<C>(self.ctx, &self.problem.field.extra_terms.join("\n"))?;
            w = w.add(&extra)?;
        }
        Ok(w)
    }

    pub fn kam_config(&self) -> KamConfig {
        let k = &self.problem.tasks.kam;
        let d = KamConfig::default();
        KamConfig {
            m_star: k.m_star,
            gamma: k.gamma.unwrap_or(d.gamma),
            r_prime: k.r_prime.unwrap_or(d.r_prime),
            s0: k.s0.unwrap_or(d.s0),
            sigma: k.sigma.unwrap_or(d.sigma),
            k1: k.k1.unwrap_or(d.k1),
            c: k.c.unwrap_or(d.c),
            big_c: k.big_c.unwrap_or(d.big_c),
        }
    }

    pub fn flow_config(&self) -> FlowConfig {
        let f = &self.problem.tasks.flow;
        let d = FlowConfig { steps: 200, ..FlowConfig::default() };
        FlowConfig {
            steps: f.steps.unwrap_or(d.steps),
            horizon: f.horizon.unwrap_or(d.horizon),
            blowup: f.blowup.unwrap_or(d.blowup),
            split_linear: true,
        }
    }

    pub fn tau(&self) -> f64 {
        self.problem.tasks.tau.unwrap_or(2.0)
    }

    pub fn degree_bound(&self) -> u32 {
        self.problem.tasks.degree_bound.unwrap_or(self.ctx.degree_cutoff)
    }

    pub fn rhos(&self) -> Vec<f64> {
        self.problem.tasks.rhos.clone().unwrap_or_else(|| vec![0.05, 0.025, 0.0125])
    }

    pub fn direction_seed(&self) -> u64 {
        self.problem.tasks.direction_seed.unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let bad = r#"{"schema_version":1,"model":{"builder":"dim6","zeta1":1.4,"zeta2":1.7,"zeta3":2},
            "truncation":{"degree_cutoff":4}}"#;
        assert!(matches!(ProblemFile::parse(bad), Err(Error::Parse { .. })));
        let bad = r#"{"schema_version":1,"model":{"builder":"dim6","zeta1":1.4,"zeta2":1.7},
            "truncation":{"degree_cutoff":4},"extra":1}"#;
        assert!(ProblemFile::parse(bad).is_err());
        let old = r#"{"schema_version":0,"model":{"builder":"dim6","zeta1":1.4,"zeta2":1.7},"truncation":{"degree_cutoff":4}}"#;
        assert_eq!(ProblemFile::parse(old).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ProblemFile::parse("{\n  \"schema_version\": 1,\n  oops\n}").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.starts_with("column"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn explicit_model_matches_builder() {
        let text = r#"{"schema_version":1,
            "model":{"builder":"explicit",
                     "symbols":[{"name":"one","exact":"1"},{"name":"zeta","value":1.4142135623730951}],
                     "lambda":{"1":["2","0"],"2":["1","0"],"3":["0","1"],"4":["0","-1"]}},
            "truncation":{"degree_cutoff":5},
            "field":{"extra_terms":["1 | 2:2 3:1 4:1 | 1/2"]}}"#;
        let p = ProblemFile::parse(text).unwrap();
        let s = Setup::new(p, Path::new("."), None, None).unwrap();
        assert_eq!(s.ctx.modes, ModeSet::Finite(4));
        let w: VectorField<GaussRational> = s.field().unwrap();
        assert_eq!(w.len(), 5);
        let m = intro4_model(2f64.sqrt()).unwrap();
        for k in s.ctx.modes() {
            assert_eq!(s.model.lambda_key(k), m.lambda_key(k));
        }
    }
}
