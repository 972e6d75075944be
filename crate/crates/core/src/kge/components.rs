//! Multi-semantic relation components: cluster the angle vectors of a
//! relation and replace its single phase vector with per-cluster circular
//! means, scored by the best component.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kge::angles::AngleVectorSet;
use crate::kge::rotate::{ComplexEmbedding, KgeTables, Norm, PhaseVector};
use crate::numeric::matrix::sq_dist;
use crate::numeric::{circular_mean, mean_shift, pca_fit, wrap_angle, Kernel, MeanShiftConfig};

/// The derived components of one relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticComponentSet {
    pub relation: usize,
    /// `k >= 1` phase vectors, largest cluster first.
    pub components: Vec<PhaseVector>,
    /// Members per component.
    pub member_counts: Vec<usize>,
}

impl SemanticComponentSet {
    pub fn k(&self) -> usize {
        self.components.len()
    }
}

/// How cluster members are averaged into a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AngleAveraging {
    /// Per-coordinate circular mean; correct across the ±π branch cut.
    #[default]
    Circular,
    /// Plain arithmetic mean of the wrapped angles, kept for comparison
    /// with the literal averaging formula.
    Arithmetic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentConfig {
    /// PCA target dimension for the clustering space.
    pub pca_dim: usize,
    /// Mean-Shift bandwidth in the reduced space; `None` auto-selects.
    pub bandwidth: Option<f64>,
    pub kernel: Kernel,
    pub max_iter: usize,
    pub tol: f64,
    pub averaging: AngleAveraging,
    /// Clusters smaller than this merge into the nearest larger cluster,
    /// unless the relation has fewer than `min_pairs_for_merge` pairs.
    pub min_cluster_size: usize,
    pub min_pairs_for_merge: usize,
}

impl Default for ComponentConfig {
    fn default() -> Self {
        ComponentConfig {
            pca_dim: 2,
            bandwidth: None,
            kernel: Kernel::Flat,
            max_iter: 300,
            tol: 1e-6,
            averaging: AngleAveraging::Circular,
            min_cluster_size: 2,
            min_pairs_for_merge: 4,
        }
    }
}

fn average_cluster(
    angles: &AngleVectorSet,
    members: &[usize],
    averaging: AngleAveraging,
) -> Result<PhaseVector> {
    let dim = angles.dim();
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim {
        let coords: Vec<f64> = members.iter().map(|&i| angles.vectors[i][j]).collect();
        let v = match averaging {
            AngleAveraging::Circular => circular_mean(&coords)?,
            AngleAveraging::Arithmetic => {
                wrap_angle(coords.iter().sum::<f64>() / coords.len() as f64)
            }
        };
        out.push(v);
    }
    Ok(PhaseVector::new(out))
}

/// Cluster a relation's angle vectors and average each cluster into a
/// semantic component.
///
/// Clustering runs in PCA-reduced space; averaging runs over the original
/// full-dimensional angles so components stay usable as phase vectors.
pub fn derive_components(angles: &AngleVectorSet, config: &ComponentConfig) -> Result<SemanticComponentSet> {
    let c = angles.pair_count();
    if c == 0 {
        return Err(Error::invalid("no angle vectors to cluster"));
    }
    let dim = angles.dim();
    if config.pca_dim > dim {
        return Err(Error::invalid(format!(
            "pca_dim {} exceeds angle dimension {dim}",
            config.pca_dim
        )));
    }

    let single = |angles: &AngleVectorSet| -> Result<SemanticComponentSet> {
        let members: Vec<usize> = (0..c).collect();
        Ok(SemanticComponentSet {
            relation: angles.relation,
            components: vec![average_cluster(angles, &members, config.averaging)?],
            member_counts: vec![c],
        })
    };
    if c == 1 {
        return single(angles);
    }

    // Degenerate (all-identical) inputs have no principal directions; they
    // are one cluster by definition.
    let reduced: Vec<Vec<f64>> = match pca_fit(&angles.vectors, config.pca_dim) {
        Ok(model) => angles
            .vectors
            .iter()
            .map(|v| model.transform(v))
            .collect::<Result<_>>()?,
        Err(Error::Degenerate(_)) => return single(angles),
        Err(e) => return Err(e),
    };

    let ms = mean_shift(
        &reduced,
        &MeanShiftConfig {
            bandwidth: config.bandwidth,
            kernel: config.kernel,
            max_iter: config.max_iter,
            tol: config.tol,
        },
    )?;

    let mut clusters = ms.cluster_members();
    // Singleton suppression: tiny clusters overfit, so push their members
    // into the nearest adequately sized cluster when the relation has
    // enough pairs to support it.
    if c >= config.min_pairs_for_merge && config.min_cluster_size > 1 {
        let large: Vec<usize> = (0..clusters.len())
            .filter(|&k| clusters[k].len() >= config.min_cluster_size)
            .collect();
        if !large.is_empty() {
            let small: Vec<usize> = (0..clusters.len())
                .filter(|&k| clusters[k].len() < config.min_cluster_size)
                .collect();
            for k in small {
                let members = std::mem::take(&mut clusters[k]);
                for m in members {
                    let nearest = *large
                        .iter()
                        .min_by(|&&a, &&b| {
                            let da = sq_dist(&reduced[m], &ms.modes[a]);
                            let db = sq_dist(&reduced[m], &ms.modes[b]);
                            da.partial_cmp(&db).unwrap()
                        })
                        .expect("non-empty large list");
                    clusters[nearest].push(m);
                }
            }
            clusters.retain(|c| !c.is_empty());
            for c in clusters.iter_mut() {
                c.sort_unstable();
            }
        }
    }

    let mut components: Vec<(Vec<usize>, PhaseVector)> = clusters
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| {
            let pv = average_cluster(angles, &m, config.averaging)?;
            Ok((m, pv))
        })
        .collect::<Result<_>>()?;
    // Deterministic order independent of input row permutation: largest
    // cluster first, phases as the tie-break.
    components.sort_by(|a, b| {
        b.0.len()
            .cmp(&a.0.len())
            .then_with(|| a.1.phases().partial_cmp(b.1.phases()).unwrap())
    });

    Ok(SemanticComponentSet {
        relation: angles.relation,
        member_counts: components.iter().map(|(m, _)| m.len()).collect(),
        components: components.into_iter().map(|(_, p)| p).collect(),
    })
}

/// Max-component score: the negated rotation distance of the best
/// component, plus the index of the component that won.
pub fn msre_score(
    h: &ComplexEmbedding,
    components: &SemanticComponentSet,
    t: &ComplexEmbedding,
    norm: Norm,
) -> Result<(f64, usize)> {
    if components.components.is_empty() {
        return Err(Error::invalid("component set is empty"));
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    for (k, pv) in components.components.iter().enumerate() {
        let s = -crate::kge::rotate::rotate_score(h, pv, t, norm)?;
        if s > best {
            best = s;
            arg = k;
        }
    }
    Ok((best, arg))
}

/// Table-indexed variant of [`msre_score`] for the evaluation hot path.
pub fn msre_score_tables(
    tables: &KgeTables,
    h: usize,
    components: &SemanticComponentSet,
    t: usize,
    norm: Norm,
) -> (f64, usize) {
    let (hre, him) = tables.entity_parts(h);
    let (tre, tim) = tables.entity_parts(t);
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    for (k, pv) in components.components.iter().enumerate() {
        let s = -crate::kge::rotate::rotate_distance_slices(hre, him, pv.phases(), tre, tim, norm);
        if s > best {
            best = s;
            arg = k;
        }
    }
    (best, arg)
}
