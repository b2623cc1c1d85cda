//! Occlusion-aware refinement of link scores.
//!
//! Each top vertex whose best bottom candidates have high and similar link
//! scores forms a subset: the top is observed, the choice among its bottom
//! candidates is hidden. Every (top, bottom) choice is represented by a
//! virtual box, and neighbouring subsets are coupled by
//! `psi = exp(-IoU / alpha)` between their virtual boxes, so configurations
//! in which two pedestrians' boxes pile on top of each other are penalised.
//! Loopy max-product message passing yields per-choice beliefs `c`, and the
//! link scores of subset members become `c * sum(e)` before the bipartite
//! matching is re-run.

use serde::{Deserialize, Serialize};

use crate::decoder::{CandidateSet, Peak};
use crate::error::{Result, TllError};
use crate::eval::{iou, line_to_box, DEFAULT_ASPECT};
use crate::geom::{BBox, TopoLine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MrfConfig {
    /// IoU normalisation in the pairwise compatibility.
    pub alpha: f64,
    /// Minimum link score for a bottom to join a subset.
    pub ambiguity_abs: f64,
    /// A member must score at least this fraction of the subset's best.
    pub ambiguity_rel: f64,
    pub max_iterations: usize,
    /// Weight of the previous message in each update.
    pub damping: f64,
    pub convergence_eps: f64,
    /// Aspect ratio of virtual boxes.
    pub aspect: f64,
}

impl Default for MrfConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            ambiguity_abs: 0.2,
            ambiguity_rel: 0.8,
            max_iterations: 20,
            damping: 0.5,
            convergence_eps: 1e-6,
            aspect: DEFAULT_ASPECT,
        }
    }
}

impl MrfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(TllError::InvalidConfig("alpha must be > 0".into()));
        }
        if self.max_iterations < 1 {
            return Err(TllError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(TllError::InvalidConfig("damping must be in [0, 1)".into()));
        }
        if !(self.aspect > 0.0) {
            return Err(TllError::InvalidConfig("aspect must be > 0".into()));
        }
        Ok(())
    }
}

/// One candidate top vertex with its ambiguous bottom candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct MrfSubset {
    /// Row of the top vertex in the candidate set.
    pub top_index: usize,
    pub top: Peak,
    /// Columns of the member bottoms in the candidate set.
    pub bottom_indices: Vec<usize>,
    pub bottoms: Vec<Peak>,
    pub link_scores: Vec<f64>,
    pub virtual_boxes: Vec<BBox>,
    /// Filled in by inference; empty before.
    pub beliefs: Vec<f64>,
}

impl MrfSubset {
    pub fn len(&self) -> usize {
        self.bottoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bottoms.is_empty()
    }
}

/// Pairwise compatibility between two subsets: `psi[n][m]` couples state `n`
/// of subset `a` with state `m` of subset `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MrfEdge {
    pub a: usize,
    pub b: usize,
    pub psi: Vec<Vec<f64>>,
}

/// Groups, for every top vertex, the bottoms whose link score is at least
/// `ambiguity_abs` and at least `ambiguity_rel` times the top's best score.
pub fn build_subsets(cands: &CandidateSet, cfg: &MrfConfig) -> Result<Vec<MrfSubset>> {
    cfg.validate()?;
    let mut subsets = Vec::new();
    for (i, row) in cands.link_scores.iter().enumerate() {
        let best = row
            .iter()
            .copied()
            .filter(|e| e.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if !best.is_finite() {
            continue;
        }
        let members: Vec<usize> = row
            .iter()
            .enumerate()
            .filter(|(_, &e)| e.is_finite() && e >= cfg.ambiguity_abs && e >= cfg.ambiguity_rel * best)
            .map(|(j, _)| j)
            .collect();
        if members.is_empty() {
            continue;
        }
        let top = cands.tops[i];
        let mut virtual_boxes = Vec::with_capacity(members.len());
        for &j in &members {
            let line = TopoLine::new(top.point, cands.bottoms[j].point, 1.0);
            virtual_boxes.push(line_to_box(&line, cfg.aspect)?);
        }
        subsets.push(MrfSubset {
            top_index: i,
            top,
            bottoms: members.iter().map(|&j| cands.bottoms[j]).collect(),
            link_scores: members.iter().map(|&j| row[j]).collect(),
            bottom_indices: members,
            virtual_boxes,
            beliefs: Vec::new(),
        });
    }
    Ok(subsets)
}

/// `psi[n][m] = exp(-IoU(VB_i[n], VB_j[m]) / alpha)`
pub fn neighbor_compatibility(si: &MrfSubset, sj: &MrfSubset, cfg: &MrfConfig) -> Vec<Vec<f64>> {
    si.virtual_boxes
        .iter()
        .map(|a| {
            sj.virtual_boxes
                .iter()
                .map(|b| (-iou(a, b) / cfg.alpha).exp())
                .collect()
        })
        .collect()
}

/// Edges between every pair of subsets whose virtual boxes overlap at all.
pub fn build_edges(subsets: &[MrfSubset], cfg: &MrfConfig) -> Vec<MrfEdge> {
    let mut edges = Vec::new();
    for a in 0..subsets.len() {
        for b in a + 1..subsets.len() {
            let overlaps = subsets[a]
                .virtual_boxes
                .iter()
                .any(|x| subsets[b].virtual_boxes.iter().any(|y| iou(x, y) > 0.0));
            if overlaps {
                edges.push(MrfEdge {
                    a,
                    b,
                    psi: neighbor_compatibility(&subsets[a], &subsets[b], cfg),
                });
            }
        }
    }
    edges
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// Normalised max-marginal beliefs per subset.
    pub beliefs: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl Inference {
    /// Most believed state of every subset (lowest index on ties).
    pub fn map_states(&self) -> Vec<usize> {
        self.beliefs
            .iter()
            .map(|b| {
                b.iter()
                    .enumerate()
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |best, (n, &v)| if v > best.1 { (n, v) } else { best },
                    )
                    .0
            })
            .collect()
    }
}

fn normalize_max(v: &mut [f64]) {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m > 0.0 && m.is_finite() {
        v.iter_mut().for_each(|x| *x /= m);
    } else {
        v.iter_mut().for_each(|x| *x = 1.0);
    }
}

fn normalize_sum(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / v.len().max(1) as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// Damped synchronous loopy max-product over subsets with unary potentials
/// `unaries[i][n]` and the given pairwise edges.
pub fn max_product(unaries: &[Vec<f64>], edges: &[MrfEdge], cfg: &MrfConfig) -> Inference {
    let n_nodes = unaries.len();
    // Directed message k: 2*e is a -> b (over b's states), 2*e+1 is b -> a.
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for (e, edge) in edges.iter().enumerate() {
        incoming[edge.b].push(2 * e);
        incoming[edge.a].push(2 * e + 1);
    }
    let target = |k: usize| {
        if k.is_multiple_of(2) {
            edges[k / 2].b
        } else {
            edges[k / 2].a
        }
    };
    let mut msgs: Vec<Vec<f64>> = (0..2 * edges.len())
        .map(|k| vec![1.0; unaries[target(k)].len()])
        .collect();

    // Product of the unary and all incoming messages except `skip`.
    let gather = |msgs: &[Vec<f64>], node: usize, skip: Option<usize>| -> Vec<f64> {
        let mut v = unaries[node].clone();
        for &k in &incoming[node] {
            if Some(k) == skip {
                continue;
            }
            for (x, m) in v.iter_mut().zip(&msgs[k]) {
                *x *= m;
            }
        }
        v
    };

    let mut iterations = 0;
    let mut converged = edges.is_empty();
    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let mut delta: f64 = 0.0;
        let mut next = msgs.clone();
        for (e, edge) in edges.iter().enumerate() {
            for forward in [true, false] {
                let (src, dst, k, reverse) = if forward {
                    (edge.a, edge.b, 2 * e, 2 * e + 1)
                } else {
                    (edge.b, edge.a, 2 * e + 1, 2 * e)
                };
                let h = gather(&msgs, src, Some(reverse));
                let mut out: Vec<f64> = (0..unaries[dst].len())
                    .map(|t| {
                        h.iter()
                            .enumerate()
                            .map(|(s, hs)| {
                                let psi = if forward { edge.psi[s][t] } else { edge.psi[t][s] };
                                hs * psi
                            })
                            .fold(0.0, f64::max)
                    })
                    .collect();
                normalize_max(&mut out);
                for (o, old) in out.iter_mut().zip(&msgs[k]) {
                    *o = (1.0 - cfg.damping) * *o + cfg.damping * old;
                }
                normalize_max(&mut out);
                for (o, old) in out.iter().zip(&msgs[k]) {
                    delta = delta.max((o - old).abs());
                }
                next[k] = out;
            }
        }
        msgs = next;
        converged = delta < cfg.convergence_eps;
    }

    let beliefs = (0..n_nodes)
        .map(|i| {
            let mut b = gather(&msgs, i, None);
            normalize_sum(&mut b);
            b
        })
        .collect();
    Inference {
        beliefs,
        iterations,
        converged,
    }
}

/// Runs inference on the subsets of `cands` and rewrites the link score of
/// every subset member to `belief * sum of the subset's link scores`.
/// Pairs outside any subset keep their score.
pub fn refine(cands: &CandidateSet, cfg: &MrfConfig) -> Result<CandidateSet> {
    let (subsets, inference) = infer(cands, cfg)?;
    let mut out = cands.clone();
    for (s, beliefs) in subsets.iter().zip(&inference.beliefs) {
        let total: f64 = s.link_scores.iter().sum();
        for (&j, &c) in s.bottom_indices.iter().zip(beliefs) {
            out.link_scores[s.top_index][j] = c * total;
        }
    }
    Ok(out)
}

/// Subsets with their beliefs filled in, plus the raw inference result.
pub fn infer(cands: &CandidateSet, cfg: &MrfConfig) -> Result<(Vec<MrfSubset>, Inference)> {
    let mut subsets = build_subsets(cands, cfg)?;
    let edges = build_edges(&subsets, cfg);
    let unaries: Vec<Vec<f64>> = subsets.iter().map(|s| s.link_scores.clone()).collect();
    let inference = max_product(&unaries, &edges, cfg);
    for (s, b) in subsets.iter_mut().zip(&inference.beliefs) {
        s.beliefs = b.clone();
    }
    Ok((subsets, inference))
}
