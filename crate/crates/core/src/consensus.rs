//! Time-varying random-graph link process and the diversity-based binary
//! consensus protocol, plus the centralized majority-rule fusion baseline.
//!
//! In the diversity scheme every SU keeps rebroadcasting its *initial* vote,
//! so step `t` contributes `B(0) * a_i(t)` to SU `i`'s accumulator. After `K`
//! steps SU `i` decides channel `j` occupied iff
//!
//! ```text
//! (b_ji(0) + acc_ji / (K p)) / M >= 0.5
//! ```
//!
//! The accumulator is integer-valued and kept exact, which makes the p = 1
//! case coincide with the inclusive majority rule bit for bit.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::sensing::LocalDecisionVector;

/// Symmetric, zero-diagonal link matrix of one time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    a: Array2<u8>,
}

impl AdjacencyMatrix {
    /// Wrap an explicit matrix, checking symmetry and the zero diagonal.
    pub fn from_array(a: Array2<u8>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                context: "adjacency",
                expected: "square matrix".into(),
                got: format!("{} x {}", a.nrows(), a.ncols()),
            });
        }
        for i in 0..a.nrows() {
            if a[(i, i)] != 0 {
                return Err(Error::invalid("adjacency", "diagonal must be zero"));
            }
            for j in 0..a.ncols() {
                if a[(i, j)] > 1 || a[(i, j)] != a[(j, i)] {
                    return Err(Error::invalid("adjacency", "must be symmetric binary"));
                }
            }
        }
        Ok(AdjacencyMatrix { a })
    }

    /// Fully connected graph on `m` nodes.
    pub fn complete(m: usize) -> Self {
        AdjacencyMatrix {
            a: Array2::from_shape_fn((m, m), |(i, j)| u8::from(i != j)),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.a.nrows()
    }

    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.a[(i, j)] == 1
    }

    pub fn matrix(&self) -> &Array2<u8> {
        &self.a
    }
}

/// Binary votes of all SUs: `N x M`, column `i` = SU `i`'s channel votes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionMatrix {
    b: Array2<u8>,
}

impl DecisionMatrix {
    pub fn from_array(b: Array2<u8>) -> Result<Self> {
        if b.iter().any(|&v| v > 1) {
            return Err(Error::invalid("decision matrix", "entries must be 0 or 1"));
        }
        Ok(DecisionMatrix { b })
    }

    /// Stack per-SU local decision vectors as columns.
    pub fn from_local_votes(votes: &[LocalDecisionVector]) -> Result<Self> {
        let m = votes.len();
        let n = votes.first().map_or(0, |v| v.bits.len());
        if votes.iter().any(|v| v.bits.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "decision matrix",
                expected: format!("{n} channels per SU"),
                got: "ragged vote vectors".into(),
            });
        }
        let mut b = Array2::zeros((n, m));
        for (i, v) in votes.iter().enumerate() {
            for (j, &bit) in v.bits.iter().enumerate() {
                if bit > 1 {
                    return Err(Error::invalid("decision matrix", "entries must be 0 or 1"));
                }
                b[(j, i)] = bit;
            }
        }
        Ok(DecisionMatrix { b })
    }

    pub fn zeros(n_channels: usize, n_sus: usize) -> Self {
        DecisionMatrix {
            b: Array2::zeros((n_channels, n_sus)),
        }
    }

    pub fn n_channels(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_sus(&self) -> usize {
        self.b.ncols()
    }

    pub fn get(&self, channel: usize, su: usize) -> u8 {
        self.b[(channel, su)]
    }

    pub fn matrix(&self) -> &Array2<u8> {
        &self.b
    }
}

/// Running state of one consensus execution.
#[derive(Debug, Clone)]
pub struct ConsensusState<R: Real> {
    initial: DecisionMatrix,
    /// Exact neighbor-vote counts accumulated over the steps run so far;
    /// entry range is `[0, steps_run * (M - 1)]`.
    accumulator: Array2<u32>,
    steps_run: usize,
    link_prob: R,
}

impl<R: Real> ConsensusState<R> {
    pub fn new(initial: DecisionMatrix, link_prob: R) -> Self {
        let shape = (initial.n_channels(), initial.n_sus());
        ConsensusState {
            initial,
            accumulator: Array2::zeros(shape),
            steps_run: 0,
            link_prob,
        }
    }

    pub fn steps_run(&self) -> usize {
        self.steps_run
    }

    /// Fold one link round into the accumulator: every SU receives the
    /// initial votes of its currently connected neighbors.
    pub fn step(&mut self, links: &AdjacencyMatrix) -> Result<()> {
        let m = self.initial.n_sus();
        if links.n_nodes() != m {
            return Err(Error::DimensionMismatch {
                context: "consensus step",
                expected: format!("{m} nodes"),
                got: format!("{}", links.n_nodes()),
            });
        }
        let n = self.initial.n_channels();
        for i in 0..m {
            for l in 0..m {
                if links.connected(i, l) {
                    for j in 0..n {
                        self.accumulator[(j, i)] += u32::from(self.initial.get(j, l));
                    }
                }
            }
        }
        self.steps_run += 1;
        Ok(())
    }

    /// Decision matrix after the steps run so far, normalizing the
    /// accumulator by `1 / (steps_run * p)`.
    pub fn decide(&self) -> DecisionMatrix {
        assert!(self.steps_run > 0, "no consensus steps run yet");
        let m = R::of(self.initial.n_sus() as f64);
        let scale = R::one() / (R::of(self.steps_run as f64) * self.link_prob);
        let b = Array2::from_shape_fn(
            (self.initial.n_channels(), self.initial.n_sus()),
            |(j, i)| {
                let own = R::of(f64::from(self.initial.get(j, i)));
                let received = R::of(f64::from(self.accumulator[(j, i)])) * scale;
                dec((own + received) / m)
            },
        );
        DecisionMatrix { b }
    }
}

/// Decision function: 1 iff `x >= 0.5` (inclusive), applied elementwise.
pub fn dec<R: Real>(x: R) -> u8 {
    u8::from(x >= R::of(0.5))
}

/// Draw one step's link matrix: each unordered pair is connected with
/// probability `p`, independently per pair and per step.
pub fn sample_adjacency<R: Real, G: Rng + ?Sized>(
    m: usize,
    p: R,
    rng: &mut G,
) -> AdjacencyMatrix {
    let mut a = Array2::zeros((m, m));
    for i in 0..m {
        for j in (i + 1)..m {
            let edge = u8::from(R::uniform(rng, R::zero(), R::one()) < p);
            a[(i, j)] = edge;
            a[(j, i)] = edge;
        }
    }
    AdjacencyMatrix { a }
}

/// Run the protocol against an explicit link sequence and return the final
/// decisions (normalizer uses the full sequence length).
pub fn run_with_links<R: Real>(
    b0: &DecisionMatrix,
    links: &[AdjacencyMatrix],
    p: R,
) -> Result<DecisionMatrix> {
    let mut state = ConsensusState::new(b0.clone(), p);
    for a in links {
        state.step(a)?;
    }
    Ok(state.decide())
}

/// Like [`run_with_links`] but returns the decision after every prefix of the
/// link sequence, with the step-`t` normalizer `1 / (t p)`.
pub fn run_with_links_trace<R: Real>(
    b0: &DecisionMatrix,
    links: &[AdjacencyMatrix],
    p: R,
) -> Result<Vec<DecisionMatrix>> {
    let mut state = ConsensusState::new(b0.clone(), p);
    let mut trace = Vec::with_capacity(links.len());
    for a in links {
        state.step(a)?;
        trace.push(state.decide());
    }
    Ok(trace)
}

/// Run `k` steps of diversity-based consensus over a fresh Bernoulli(`p`)
/// link process and return every SU's final channel decisions.
pub fn run_diversity_consensus<R: Real, G: Rng + ?Sized>(
    b0: &DecisionMatrix,
    k: usize,
    p: R,
    rng: &mut G,
) -> DecisionMatrix {
    run_diversity_consensus_trace(b0, k, p, rng)
        .pop()
        .expect("k >= 1")
}

/// Trace variant: decisions after each step `1..=k`. The final element is the
/// protocol's output; earlier entries are diagnostics for convergence plots.
pub fn run_diversity_consensus_trace<R: Real, G: Rng + ?Sized>(
    b0: &DecisionMatrix,
    k: usize,
    p: R,
    rng: &mut G,
) -> Vec<DecisionMatrix> {
    assert!(k >= 1, "need at least one consensus step");
    assert!(p > R::zero() && p <= R::one(), "need 0 < p <= 1");
    let mut state = ConsensusState::new(b0.clone(), p);
    let mut trace = Vec::with_capacity(k);
    for _ in 0..k {
        let links = sample_adjacency(b0.n_sus(), p, rng);
        state.step(&links).expect("links drawn with matching size");
        trace.push(state.decide());
    }
    trace
}

/// Centralized majority-rule baseline: channel `j` is declared occupied iff
/// at least `M / 2` SUs voted 1 (inclusive).
pub fn fusion_majority(b0: &DecisionMatrix) -> Vec<u8> {
    let m = b0.n_sus();
    (0..b0.n_channels())
        .map(|j| {
            let votes: u32 = (0..m).map(|i| u32::from(b0.get(j, i))).sum();
            u8::from(2 * votes as usize >= m)
        })
        .collect()
}
