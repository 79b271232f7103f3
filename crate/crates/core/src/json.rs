//! JSON forms of channels, circuits, counts and threshold certificates.
//!
//! Complex matrices are arrays of rows, each entry a `[re, im]` pair.
//!
//! Channel: `{"kind": "unitary"|"kraus"|"choi"|"measure_prepare"|"named",
//! "dim": d, "data": ..., "name": optional}` where `data` is a matrix
//! (unitary, choi), a list of matrices (kraus) or a list of
//! `[povm element, prepared state]` pairs (measure_prepare). Named channels
//! take `"name"` and optionally `"dim"` (2 or 4) for `depolarize` and
//! `identity`. A bare string is shorthand for a named channel.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bmachine::{named_state, BiEntanglingGateSpec, Circuit, Counts, Gate, KrausPair};
use crate::channels::{self, Channel, ChoiState, KrausSet, MeasurePrepare};
use crate::qmath::{c, labels, qubit_count, ComplexMatrix, DensityMatrix};
use crate::thresholds::{PptSample, ProductDecomposition, ProductTerm, Split, ThresholdCertificate};
use crate::{Error, Result, SCHEMA_VERSION};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidMatrix("ragged or empty matrix".into()));
    }
    Ok(ComplexMatrix::from_fn(n, cols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Unitary,
    Kraus,
    Choi,
    MeasurePrepare,
    Named,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub kind: ChannelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ChannelRef {
    Name(String),
    Full(ChannelJson),
}

/// Channels available by name.
pub const NAMED_CHANNELS: [&str; 9] = [
    "cnot", "pi8", "phase_s", "hadamard", "depolarize", "dephase", "identity", "swap", "cz",
];

pub fn named_channel(name: &str, dim: Option<usize>) -> Result<Channel> {
    let qubits = match dim {
        None => 1,
        Some(d) => qubit_count(d)?,
    };
    let ch = match name {
        "cnot" => channels::cnot(),
        "pi8" => channels::pi8(),
        "phase_s" => channels::phase_s(),
        "hadamard" => channels::hadamard(),
        "depolarize" => channels::depolarize(qubits),
        "dephase" => channels::dephase(),
        "identity" => channels::identity_channel(qubits),
        "swap" => channels::swap(),
        "cz" => channels::unitary(&channels::gates::cz())?.named("cz"),
        other => return Err(Error::InvalidChannel(format!("unknown named channel {other:?}"))),
    };
    Ok(ch)
}

fn data<T: for<'de> Deserialize<'de>>(j: &ChannelJson) -> Result<T> {
    let v = j
        .data
        .clone()
        .ok_or_else(|| Error::InvalidChannel(format!("{:?} channel needs \"data\"", j.kind)))?;
    Ok(serde_json::from_value(v)?)
}

fn check_dim(j: &ChannelJson, d: usize) -> Result<()> {
    match j.dim {
        Some(x) if x != d => Err(Error::InvalidChannel(format!("declared dim {x}, data has {d}"))),
        _ => Ok(()),
    }
}

fn state_labels(d: usize) -> Result<Vec<String>> {
    Ok((0..qubit_count(d)?).map(|q| format!("q{q}")).collect())
}

pub fn channel_from_json(j: &ChannelJson) -> Result<Channel> {
    let ch = match j.kind {
        ChannelKind::Named => {
            if j.data.is_some() {
                return Err(Error::InvalidChannel("named channel takes no data".into()));
            }
            let name = j
                .name
                .as_deref()
                .ok_or_else(|| Error::InvalidChannel("named channel needs \"name\"".into()))?;
            return named_channel(name, j.dim);
        }
        ChannelKind::Unitary => {
            let u = matrix_from_json(&data(j)?)?;
            check_dim(j, u.nrows())?;
            channels::unitary(&u)?
        }
        ChannelKind::Kraus => {
            let ops: Vec<MatrixJson> = data(j)?;
            let ops = ops.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
            let set = KrausSet::new(ops)?;
            check_dim(j, set.in_dim())?;
            Channel::from_kraus(&set)
        }
        ChannelKind::Choi => {
            let m = matrix_from_json(&data(j)?)?;
            let d = j
                .dim
                .ok_or_else(|| Error::InvalidChannel("choi channel needs \"dim\"".into()))?;
            let n_in = qubit_count(d)?;
            let n_out = qubit_count(m.nrows() / d)?;
            Channel::from_choi(ChoiState::from_matrix(m, n_in, n_out)?)?
        }
        ChannelKind::MeasurePrepare => {
            let pairs: Vec<(MatrixJson, MatrixJson)> = data(j)?;
            let mut povm = Vec::new();
            let mut prepared = Vec::new();
            for (m, r) in &pairs {
                povm.push(matrix_from_json(m)?);
                let r = matrix_from_json(r)?;
                prepared.push(DensityMatrix::new(r.clone(), state_labels(r.nrows())?)?);
            }
            let mp = MeasurePrepare::new(povm, prepared)?;
            check_dim(j, mp.in_dim())?;
            Channel::from_measure_prepare(&mp)
        }
    };
    Ok(match &j.name {
        Some(n) => ch.named(n.clone()),
        None => ch,
    })
}

pub fn channel_from_ref(r: &ChannelRef) -> Result<Channel> {
    match r {
        ChannelRef::Name(n) => named_channel(n, None),
        ChannelRef::Full(j) => channel_from_json(j),
    }
}

/// Kraus form of any channel.
pub fn channel_to_json(ch: &Channel) -> ChannelJson {
    ChannelJson {
        kind: ChannelKind::Kraus,
        dim: Some(1 << ch.in_qubits()),
        data: Some(json!(ch.kraus().iter().map(matrix_to_json).collect::<Vec<_>>())),
        name: ch.name().map(str::to_string),
    }
}

pub fn parse_channel(text: &str) -> Result<Channel> {
    let r: ChannelRef = serde_json::from_str(text)?;
    channel_from_ref(&r)
}

// ---------------------------------------------------------------------------
// Bi-entangling gate specs

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct MeasurePrepareJson {
    pub povm: Vec<MatrixJson>,
    pub prepared: Vec<MatrixJson>,
}

/// Either `{"name": "cnot_depolarized", "p": ..}` or explicit branches.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct BientSpecJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub separable: Vec<[MatrixJson; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub swap: Vec<[MatrixJson; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eb: Option<MeasurePrepareJson>,
}

fn pairs_from_json(pairs: &[[MatrixJson; 2]]) -> Result<Vec<KrausPair>> {
    pairs
        .iter()
        .map(|[a, b]| KrausPair::new(matrix_from_json(a)?, matrix_from_json(b)?))
        .collect()
}

pub fn bient_spec_from_json(j: &BientSpecJson) -> Result<BiEntanglingGateSpec> {
    if let Some(name) = &j.name {
        if j.weights.is_some() || !j.separable.is_empty() || !j.swap.is_empty() || j.eb.is_some() {
            return Err(Error::InvalidChannel("named spec takes only \"p\"".into()));
        }
        return match name.as_str() {
            "cnot_depolarized" => {
                let p = j
                    .p
                    .ok_or_else(|| Error::InvalidChannel("cnot_depolarized needs \"p\"".into()))?;
                crate::thresholds::cnot_depolarizing_spec(p)
            }
            other => Err(Error::InvalidChannel(format!("unknown spec {other:?}"))),
        };
    }
    if j.p.is_some() {
        return Err(Error::InvalidChannel("\"p\" only applies to named specs".into()));
    }
    let weights = j
        .weights
        .ok_or_else(|| Error::InvalidChannel("spec needs \"weights\"".into()))?;
    let eb = match &j.eb {
        None => None,
        Some(mp) => {
            let povm = mp.povm.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
            let prepared = mp
                .prepared
                .iter()
                .map(|r| DensityMatrix::new(matrix_from_json(r)?, labels(&["a", "b"])))
                .collect::<Result<Vec<_>>>()?;
            Some(MeasurePrepare::new(povm, prepared)?)
        }
    };
    BiEntanglingGateSpec::new(weights, pairs_from_json(&j.separable)?, pairs_from_json(&j.swap)?, eb)
}

pub fn bient_spec_to_json(s: &BiEntanglingGateSpec) -> BientSpecJson {
    let pairs = |ps: &[KrausPair]| {
        ps.iter()
            .map(|k| [matrix_to_json(&k.a), matrix_to_json(&k.b)])
            .collect()
    };
    BientSpecJson {
        name: None,
        p: None,
        weights: Some(s.weights()),
        separable: pairs(s.separable()),
        swap: pairs(s.swap()),
        eb: s.eb().map(|mp| MeasurePrepareJson {
            povm: mp.povm().iter().map(matrix_to_json).collect(),
            prepared: mp.prepared().iter().map(|r| matrix_to_json(r.matrix())).collect(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Circuits

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum StateRef {
    Name(String),
    Bloch {
        bloch: [f64; 3],
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum GateType {
    #[serde(rename = "1q")]
    One,
    #[serde(rename = "2q")]
    Two,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GateJson {
    #[serde(rename = "type")]
    pub kind: GateType,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bient_spec: Option<BientSpecJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CircuitJson {
    pub n_qubits: usize,
    /// Defaults to all `"0"`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub init: Vec<StateRef>,
    pub gates: Vec<GateJson>,
    pub measure: Vec<usize>,
}

/// Tolerance for a declared channel against its spec's branch mixture.
const SPEC_REFERENCE_TOL: f64 = 1e-8;

pub fn circuit_from_json(j: &CircuitJson) -> Result<Circuit> {
    let mut c = Circuit::new(j.n_qubits);
    if !j.init.is_empty() {
        if j.init.len() != j.n_qubits {
            return Err(Error::InvalidCircuit(format!(
                "{} init states for {} qubits",
                j.init.len(),
                j.n_qubits
            )));
        }
        for (q, s) in j.init.iter().enumerate() {
            let rho = match s {
                StateRef::Name(n) => named_state(n)?,
                StateRef::Bloch { bloch } => DensityMatrix::from_bloch(*bloch, "q")?,
            };
            c.set_init(q, rho)?;
        }
    }
    for (k, g) in j.gates.iter().enumerate() {
        let ctx = |e: Error| Error::InvalidCircuit(format!("gate {k}: {e}"));
        let gate = match (&g.kind, g.targets.as_slice()) {
            (GateType::One, &[t]) => {
                if g.bient_spec.is_some() {
                    return Err(ctx(Error::InvalidChannel("1q gate with bient_spec".into())));
                }
                let ch = g
                    .channel
                    .as_ref()
                    .ok_or_else(|| ctx(Error::InvalidChannel("missing channel".into())))?;
                Gate::one(channel_from_ref(ch).map_err(ctx)?, t).map_err(ctx)?
            }
            (GateType::Two, &[a, b]) => match (&g.bient_spec, &g.channel) {
                (Some(spec), declared) => {
                    let spec = bient_spec_from_json(spec).map_err(ctx)?;
                    let spec = match declared {
                        Some(ch) => {
                            let ch = channel_from_ref(ch).map_err(ctx)?;
                            spec.with_reference(ch.choi(), SPEC_REFERENCE_TOL).map_err(ctx)?
                        }
                        None => spec,
                    };
                    Gate::bient(spec, a, b).map_err(ctx)?
                }
                (None, Some(ch)) => Gate::two(channel_from_ref(ch).map_err(ctx)?, a, b).map_err(ctx)?,
                (None, None) => return Err(ctx(Error::InvalidChannel("missing channel".into()))),
            },
            _ => return Err(ctx(Error::InvalidCircuit("target count does not match type".into()))),
        };
        c.push(gate)?;
    }
    c.measure(&j.measure)?;
    Ok(c)
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let j: CircuitJson = serde_json::from_str(text)?;
    circuit_from_json(&j)
}

pub fn counts_to_json(counts: &Counts, seed: u64, shots: u64) -> Value {
    json!({
        "counts": counts,
        "metadata": {"seed": seed, "shots": shots, "version": SCHEMA_VERSION},
    })
}

// ---------------------------------------------------------------------------
// Certificates

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub weight: f64,
    pub split: String,
    pub left: MatrixJson,
    pub right: MatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WitnessesJson {
    /// `[p, min PT eigenvalue]` per bisection step.
    pub lower: Vec<[f64; 2]>,
    pub upper: Option<Vec<TermJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_lambda: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub schema_version: String,
    pub p_star: f64,
    pub split: String,
    pub tight: bool,
    pub tolerance: f64,
    pub witnesses: WitnessesJson,
}

pub fn certificate_to_json(c: &ThresholdCertificate) -> CertificateJson {
    CertificateJson {
        schema_version: SCHEMA_VERSION.to_string(),
        p_star: c.p_star,
        split: c.split.to_string(),
        tight: c.tight,
        tolerance: c.tolerance,
        witnesses: WitnessesJson {
            lower: c
                .lower_witness
                .iter()
                .map(|s| [s.p, s.min_pt_eigenvalue])
                .collect(),
            upper: c.upper_witness.as_ref().map(|d| {
                d.terms
                    .iter()
                    .map(|t| TermJson {
                        weight: t.weight,
                        split: t.split.to_string(),
                        left: matrix_to_json(&t.left),
                        right: matrix_to_json(&t.right),
                    })
                    .collect()
            }),
            noise_lambda: c.noise_lambda.clone(),
        },
    }
}

pub fn certificate_from_json(j: &CertificateJson) -> Result<ThresholdCertificate> {
    if j.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidChannel(format!(
            "certificate schema {} (expected {SCHEMA_VERSION})",
            j.schema_version
        )));
    }
    let upper = match &j.witnesses.upper {
        None => None,
        Some(terms) => Some(ProductDecomposition {
            terms: terms
                .iter()
                .map(|t| {
                    Ok(ProductTerm {
                        weight: t.weight,
                        split: t.split.parse::<Split>()?,
                        left: matrix_from_json(&t.left)?,
                        right: matrix_from_json(&t.right)?,
                    })
                })
                .collect::<Result<_>>()?,
        }),
    };
    Ok(ThresholdCertificate {
        p_star: j.p_star,
        split: j.split.parse()?,
        tight: j.tight,
        lower_witness: j
            .witnesses
            .lower
            .iter()
            .map(|&[p, e]| PptSample { p, min_pt_eigenvalue: e })
            .collect(),
        upper_witness: upper,
        tolerance: j.tolerance,
        noise_lambda: j.witnesses.noise_lambda.clone(),
    })
}

/// Rounds every float in `v` to `digits` significant digits.
pub fn round_significant(v: &mut Value, digits: i32) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| n.is_f64()) {
                if x != 0.0 && x.is_finite() {
                    // Parsing the decimal form gives the nearest double, which
                    // then prints with at most `digits` digits.
                    let prec = (digits - 1).max(0) as usize;
                    let r: f64 = format!("{x:.prec$e}").parse().expect("formatted float parses");
                    if let Some(m) = serde_json::Number::from_f64(r) {
                        *n = m;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(|x| round_significant(x, digits)),
        Value::Object(o) => o.values_mut().for_each(|x| round_significant(x, digits)),
        _ => {}
    }
}
