//! Python bindings for `bcsa_core`.

use bcsa_core::oracle::enumerate_exact as core_enumerate_exact;
use bcsa_core::sweep::{run_sweep as core_run_sweep, HandshakeSetting, LoadPoints, PairSelection, SweepConfig};
use bcsa_core::{
    generate_frame, induced_distribution, induced_view, peel, DegreeDistribution, Error, FrameAnalyzer,
    FrameGraph, HandshakeMode, OutcomeClass, ReceiverMode,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::TheoremViolation { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn receiver_mode(text: &str) -> PyResult<ReceiverMode> {
    match text {
        "broadcast" => Ok(ReceiverMode::Broadcast),
        "unicast" => Ok(ReceiverMode::Unicast),
        _ => Err(PyValueError::new_err(format!("mode must be broadcast or unicast, got '{text}'"))),
    }
}

fn handshake_mode(text: &str) -> PyResult<HandshakeMode> {
    match text {
        "fast" => Ok(HandshakeMode::Fast),
        "verify" => Ok(HandshakeMode::Verify),
        _ => Err(PyValueError::new_err(format!("handshake must be fast or verify, got '{text}'"))),
    }
}

fn class_name(class: OutcomeClass) -> &'static str {
    match class {
        OutcomeClass::FailureDetected => "p1",
        OutcomeClass::FalseHandshake => "p2",
        OutcomeClass::AuxiliaryBothFail => "p3",
        OutcomeClass::AuxiliaryPeerOk => "p4",
        OutcomeClass::Successful => "p5",
        OutcomeClass::Impossible => "impossible",
    }
}

/// A repetition-degree distribution such as `Distribution("0.25x2+0.6x3+0.15x8")`.
#[pyclass(name = "Distribution", module = "bcsa", frozen)]
struct PyDistribution(DegreeDistribution);

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        DegreeDistribution::parse(text).map(Self).map_err(py_err)
    }

    /// Builds a distribution from coefficients indexed by degree.
    #[staticmethod]
    fn from_probs(probs: Vec<f64>) -> PyResult<Self> {
        DegreeDistribution::new(probs).map(Self).map_err(py_err)
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    #[getter]
    fn max_degree(&self) -> usize {
        self.0.max_degree()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    /// Peer degrees as seen by a receiver of degree `receiver_degree`.
    fn induced(&self, slots: usize, receiver_degree: usize) -> PyResult<Self> {
        induced_distribution(&self.0, slots, receiver_degree)
            .map(Self)
            .map_err(py_err)
    }

    fn render(&self) -> String {
        self.0.render()
    }

    fn __str__(&self) -> String {
        self.0.render()
    }

    fn __repr__(&self) -> String {
        format!("Distribution('{}')", self.0.render())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

/// One frame: which slots every user transmits in.
#[pyclass(name = "Frame", module = "bcsa", frozen)]
struct PyFrame(FrameGraph);

#[pymethods]
impl PyFrame {
    #[new]
    fn new(slots: usize, slot_sets: Vec<Vec<usize>>) -> PyResult<Self> {
        FrameGraph::from_slot_sets(slots, slot_sets).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (users, slots, dist, seed = 0))]
    fn random(users: usize, slots: usize, dist: &PyDistribution, seed: u64) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        generate_frame(users, slots, &dist.0, &mut rng).map(Self).map_err(py_err)
    }

    #[getter]
    fn slot_count(&self) -> usize {
        self.0.slot_count()
    }

    #[getter]
    fn user_count(&self) -> usize {
        self.0.user_count()
    }

    fn slots_of(&self, user: usize) -> PyResult<Vec<usize>> {
        self.check_user(user)?;
        Ok(self.0.slots_of(user).to_vec())
    }

    fn users_in(&self, slot: usize) -> PyResult<Vec<usize>> {
        if slot >= self.0.slot_count() {
            return Err(PyValueError::new_err(format!("slot {slot} of {}", self.0.slot_count())));
        }
        Ok(self.0.users_in(slot).to_vec())
    }

    /// Peels the view of `user` (broadcast) or of a base station (unicast).
    /// Returns a dict with `resolved`, `order` and `residual_slots`.
    #[pyo3(signature = (user = 0, mode = "broadcast"))]
    fn decode<'py>(&self, py: Python<'py>, user: usize, mode: &str) -> PyResult<Bound<'py, PyDict>> {
        let view = induced_view(&self.0, user, receiver_mode(mode)?).map_err(py_err)?;
        let out = peel(&view);
        let dict = PyDict::new(py);
        dict.set_item("resolved", out.resolved.iter().copied().collect::<Vec<_>>())?;
        dict.set_item("order", out.order.clone())?;
        dict.set_item("residual_slots", out.residual_slots.iter().copied().collect::<Vec<_>>())?;
        Ok(dict)
    }

    /// Outcome counts of the handshake over all ordered pairs.
    #[pyo3(signature = (mode = "fast"))]
    fn handshake<'py>(&self, py: Python<'py>, mode: &str) -> PyResult<Bound<'py, PyDict>> {
        let counts = FrameAnalyzer::new(&self.0).handshake_counts(handshake_mode(mode)?, None);
        let dict = PyDict::new(py);
        for class in OutcomeClass::TABLE.into_iter().chain([OutcomeClass::Impossible]) {
            dict.set_item(class_name(class), counts.counters[class.counter() as usize])?;
        }
        dict.set_item("evaluated", counts.evaluated)?;
        Ok(dict)
    }

    fn __repr__(&self) -> String {
        format!("Frame(users={}, slots={})", self.0.user_count(), self.0.slot_count())
    }
}

impl PyFrame {
    fn check_user(&self, user: usize) -> PyResult<()> {
        if user >= self.0.user_count() {
            return Err(PyValueError::new_err(format!("user {user} of {}", self.0.user_count())));
        }
        Ok(())
    }
}

/// Exact probabilities of a tiny instance by exhaustive enumeration.
#[pyfunction]
#[pyo3(signature = (users, slots, dist, mode = "broadcast"))]
fn enumerate_exact<'py>(
    py: Python<'py>,
    users: usize,
    slots: usize,
    dist: &PyDistribution,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let exact = core_enumerate_exact(users, slots, &dist.0, receiver_mode(mode)?).map_err(py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("plr", exact.plr)?;
    dict.set_item("peer_failure", exact.peer_failure)?;
    let outcomes = PyDict::new(py);
    for (class, p) in &exact.outcome_probs {
        outcomes.set_item(class_name(*class), *p)?;
    }
    dict.set_item("outcomes", outcomes)?;
    dict.set_item("per_degree_plr", exact.per_degree_plr.clone())?;
    Ok(dict)
}

/// Runs a Monte Carlo sweep. Returns `(csv_text, points)` where each point is
/// a dict of the row's estimates.
#[pyfunction]
#[pyo3(signature = (
    dist,
    slots = 200,
    loads = None,
    users = None,
    frames = 1000,
    seed = 0,
    mode = "broadcast",
    handshake = "fast",
    reference = None,
    per_degree = false,
    threads = None,
))]
#[allow(clippy::too_many_arguments)]
fn run_sweep<'py>(
    py: Python<'py>,
    dist: &PyDistribution,
    slots: usize,
    loads: Option<Vec<f64>>,
    users: Option<Vec<usize>>,
    frames: u64,
    seed: u64,
    mode: &str,
    handshake: &str,
    reference: Option<usize>,
    per_degree: bool,
    threads: Option<usize>,
) -> PyResult<(String, Vec<Bound<'py, PyDict>>)> {
    let points = match (loads, users) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("give loads or users, not both")),
        (Some(l), None) => LoadPoints::Loads(l),
        (None, Some(u)) => LoadPoints::Users(u),
        (None, None) => return Err(PyValueError::new_err("give loads or users")),
    };
    let mut config = SweepConfig::new(slots, points, dist.0.clone());
    config.frames = frames;
    config.seed = seed;
    config.mode = receiver_mode(mode)?;
    config.handshake = match handshake {
        "fast" => HandshakeSetting::Fast,
        "verify" => HandshakeSetting::Verify,
        "off" => HandshakeSetting::Off,
        _ => return Err(PyValueError::new_err(format!("unknown handshake setting '{handshake}'"))),
    };
    config.pairs = reference.map_or(PairSelection::All, PairSelection::Reference);
    config.per_degree = per_degree;
    config.threads = threads;
    let result = py.detach(|| core_run_sweep(&config)).map_err(py_err)?;
    let mut rows = Vec::with_capacity(result.points.len());
    for p in &result.points {
        let r = &p.report;
        let row = PyDict::new(py);
        row.set_item("load", p.load)?;
        row.set_item("users", p.users)?;
        row.set_item("frames", r.frames)?;
        row.set_item("pairs", r.pairs)?;
        row.set_item("counts", p.tally.totals()[..6].to_vec())?;
        row.set_item("p", r.p.iter().map(|e| e.value).collect::<Vec<_>>())?;
        row.set_item("plr", (r.plr.value, r.plr.se))?;
        row.set_item("detect_ratio", (r.detect_ratio.value, r.detect_ratio.se))?;
        row.set_item("bound_tight", r.bound_tight)?;
        row.set_item("conj_ratio", (r.conj_ratio.value, r.conj_ratio.se))?;
        let cells: Vec<((usize, usize), (f64, f64))> = r
            .per_degree_plr
            .iter()
            .map(|(cell, e)| (*cell, (e.value, e.se)))
            .collect();
        row.set_item("per_degree_plr", cells)?;
        rows.push(row);
    }
    Ok((result.to_csv(), rows))
}

#[pymodule]
fn bcsa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyFrame>()?;
    m.add_function(wrap_pyfunction!(enumerate_exact, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
