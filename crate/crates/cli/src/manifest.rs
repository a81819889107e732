use std::collections::BTreeMap;

use pseudolab::corr::AdversaryClass;
use pseudolab::extract::Extractor;
use pseudolab::hardfn::FunctionDescriptor;
use pseudolab::prg::{EllRule, GeneratorDescriptor, JuntaConstants, SamplerDescriptor};
use serde::{Deserialize, Serialize};

/// Either the name of an object declared at the top of the manifest or the
/// object itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ref<T> {
    Name(String),
    Inline(T),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionDescriptor>,
    #[serde(default)]
    pub generators: BTreeMap<String, GeneratorSpec>,
    #[serde(default)]
    pub classes: BTreeMap<String, AdversaryClass>,
    #[serde(default)]
    pub extractors: BTreeMap<String, Extractor>,
    pub measurements: Vec<Measurement>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_timings")]
    pub timings: String,
}

fn default_report() -> String {
    "report.json".into()
}

fn default_csv() -> String {
    "results.csv".into()
}

fn default_timings() -> String {
    "timings.csv".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            report: default_report(),
            csv: default_csv(),
            timings: default_timings(),
        }
    }
}

/// A generator given either as a full descriptor or as a construction recipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Recipe(Recipe),
    Descriptor(GeneratorDescriptor),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum Recipe {
    Junta {
        n: usize,
        d: usize,
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hard: Option<FunctionDescriptor>,
        #[serde(default)]
        constants: JuntaConstants,
    },
    Bp2 {
        n: usize,
        d: usize,
        t: usize,
        epsilon: f64,
        #[serde(default)]
        constants: JuntaConstants,
    },
    Aw {
        base: Box<GeneratorSpec>,
        sampler: SamplerDescriptor,
        rounds: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub id: String,
    #[serde(flatten)]
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

/// Checks applied to a measurement's value (and its `holds` flag, for
/// measurements that compare against a bound).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    CorrExact {
        f: Ref<FunctionDescriptor>,
        g: Ref<FunctionDescriptor>,
    },
    CorrMc {
        f: Ref<FunctionDescriptor>,
        g: Ref<FunctionDescriptor>,
        samples: u64,
    },
    CorrClassMax {
        f: Ref<FunctionDescriptor>,
        class: Ref<AdversaryClass>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<u64>,
    },
    KpartyNorm {
        f: Ref<FunctionDescriptor>,
        k: usize,
        b: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<u64>,
    },
    /// `R_2(f) <= max corr against one-bit protocols <= 2 R_2(f)^(1/4)`
    /// for `f` on two one-bit blocks.
    NofSandwich {
        f: Ref<FunctionDescriptor>,
    },
    Tv {
        a: String,
        b: String,
    },
    FoolingError {
        generator: Ref<GeneratorSpec>,
        f: Ref<FunctionDescriptor>,
    },
    MaxFoolingError {
        generator: Ref<GeneratorSpec>,
        class: Ref<AdversaryClass>,
    },
    /// Strong-extractor certification against every bit-fixing source with
    /// `free` free bits.
    ExtractorCertify {
        extractor: Ref<Extractor>,
        free: usize,
        epsilon: f64,
    },
    /// Correlation of an ExtFFM function with a low-degree class against the
    /// closed-form bound; `epsilon` defaults to the extractor's measured error
    /// on `k`-free-bit sources.
    ExtffmBound {
        f: Ref<FunctionDescriptor>,
        d: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        class: Ref<AdversaryClass>,
    },
    Design {
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        universe: Option<usize>,
        r: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<u64>,
    },
    FieldAxioms {
        width: u32,
    },
    RwFactorization {
        max_size: usize,
    },
    /// Fourier L1 of random programs reading one bit per step, against `(t+1)/2`.
    L1Bound {
        programs: usize,
        max_len: usize,
        max_arity: usize,
    },
    Decomposition {
        programs: usize,
        d: usize,
        t: usize,
        n: usize,
    },
    /// NW error accounting: hardness of `hard` against `hard_class` times the
    /// output count bounds the fooling error against `target_class`.
    NwAccounting {
        hard: Ref<FunctionDescriptor>,
        count: usize,
        k: usize,
        hard_class: Ref<AdversaryClass>,
        target_class: Ref<AdversaryClass>,
    },
    /// Frequency with which a pseudorandom restriction leaves every term of a
    /// random XOR of juntas depending on at most `l` variables.
    Simplification {
        n: usize,
        d: u64,
        delta: f64,
        #[serde(default)]
        rule: EllRule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ber_delta: Option<f64>,
        width: usize,
        terms: usize,
        trials: usize,
    },
    /// Fooling error of the width-2 program generator on random programs
    /// against the junta-class error times the core's Fourier L1 norm.
    Bp2Lifting {
        n: usize,
        d: usize,
        t: usize,
        epsilon: f64,
        programs: usize,
        #[serde(default)]
        constants: JuntaConstants,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::CorrExact { .. } => "corr_exact",
            Op::CorrMc { .. } => "corr_mc",
            Op::CorrClassMax { .. } => "corr_class_max",
            Op::KpartyNorm { .. } => "kparty_norm",
            Op::NofSandwich { .. } => "nof_sandwich",
            Op::Tv { .. } => "tv",
            Op::FoolingError { .. } => "fooling_error",
            Op::MaxFoolingError { .. } => "max_fooling_error",
            Op::ExtractorCertify { .. } => "extractor_certify",
            Op::ExtffmBound { .. } => "extffm_bound",
            Op::Design { .. } => "design",
            Op::FieldAxioms { .. } => "field_axioms",
            Op::RwFactorization { .. } => "rw_factorization",
            Op::L1Bound { .. } => "l1_bound",
            Op::Decomposition { .. } => "decomposition",
            Op::NwAccounting { .. } => "nw_accounting",
            Op::Simplification { .. } => "simplification",
            Op::Bp2Lifting { .. } => "bp2_lifting",
        }
    }
}
