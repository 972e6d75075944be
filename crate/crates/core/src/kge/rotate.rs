//! Complex-rotation scoring: relations as unit-modulus elementwise
//! rotations of entity vectors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::DenseMatrix;
use crate::numeric::wrap_angle;

/// One entity as `D` complex coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexEmbedding {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexEmbedding {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::shape(format!("{} dims", re.len()), format!("{}", im.len())));
        }
        Ok(ComplexEmbedding { re, im })
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn modulus(&self, j: usize) -> f64 {
        (self.re[j] * self.re[j] + self.im[j] * self.im[j]).sqrt()
    }
}

/// One relation as `D` rotation angles in `(-pi, pi]`; the implied complex
/// entries `e^{iθ}` are unit-modulus by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(phases: Vec<f64>) -> Self {
        PhaseVector(phases.into_iter().map(wrap_angle).collect())
    }

    pub fn phases(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Distance convention over the per-coordinate complex moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Norm {
    /// Sum of moduli (the usual RotatE reading of `|h∘r − t|`).
    #[default]
    L1,
    /// Euclidean norm over the stacked real/imaginary difference.
    L2,
}

/// `h ∘ r`: rotate each coordinate of `h` by the matching phase.
pub fn rotate_apply(h: &ComplexEmbedding, r: &PhaseVector) -> Result<ComplexEmbedding> {
    if h.dim() != r.dim() {
        return Err(Error::shape(format!("{} dims", h.dim()), format!("{}", r.dim())));
    }
    let mut re = Vec::with_capacity(h.dim());
    let mut im = Vec::with_capacity(h.dim());
    for j in 0..h.dim() {
        let (s, c) = r.phases()[j].sin_cos();
        re.push(h.re[j] * c - h.im[j] * s);
        im.push(h.re[j] * s + h.im[j] * c);
    }
    Ok(ComplexEmbedding { re, im })
}

/// `d_r(h, t) = |h ∘ r − t|`; lower is more plausible.
pub fn rotate_score(h: &ComplexEmbedding, r: &PhaseVector, t: &ComplexEmbedding, norm: Norm) -> Result<f64> {
    if h.dim() != r.dim() || t.dim() != r.dim() {
        return Err(Error::shape(
            format!("{} dims", r.dim()),
            format!("h {} / t {}", h.dim(), t.dim()),
        ));
    }
    Ok(rotate_distance_slices(&h.re, &h.im, r.phases(), &t.re, &t.im, norm))
}

/// Hot-path distance over raw slices.
pub(crate) fn rotate_distance_slices(
    hre: &[f64],
    him: &[f64],
    phases: &[f64],
    tre: &[f64],
    tim: &[f64],
    norm: Norm,
) -> f64 {
    let mut acc = 0.0;
    for j in 0..phases.len() {
        let (s, c) = phases[j].sin_cos();
        let vre = hre[j] * c - him[j] * s - tre[j];
        let vim = hre[j] * s + him[j] * c - tim[j];
        let sq = vre * vre + vim * vim;
        match norm {
            Norm::L1 => acc += sq.sqrt(),
            Norm::L2 => acc += sq,
        }
    }
    match norm {
        Norm::L1 => acc,
        Norm::L2 => acc.sqrt(),
    }
}

/// Entity and relation embedding tables.
///
/// Entity row layout: `[re_0 .. re_{D-1}, im_0 .. im_{D-1}]`. Relation rows
/// hold `D` phases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KgeTables {
    pub dim: usize,
    pub entity: DenseMatrix,
    pub relation: DenseMatrix,
}

impl KgeTables {
    pub fn init(n_entities: usize, n_relations: usize, dim: usize, init_scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut entity = DenseMatrix::zeros(n_entities, 2 * dim);
        for v in entity.as_mut_slice() {
            *v = rng.random_range(-init_scale..init_scale);
        }
        let mut relation = DenseMatrix::zeros(n_relations, dim);
        for v in relation.as_mut_slice() {
            *v = wrap_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        }
        KgeTables { dim, entity, relation }
    }

    pub fn entity_parts(&self, i: usize) -> (&[f64], &[f64]) {
        let row = self.entity.row(i);
        row.split_at(self.dim)
    }

    pub fn entity_embedding(&self, i: usize) -> ComplexEmbedding {
        let (re, im) = self.entity_parts(i);
        ComplexEmbedding {
            re: re.to_vec(),
            im: im.to_vec(),
        }
    }

    pub fn relation_phases(&self, r: usize) -> &[f64] {
        self.relation.row(r)
    }

    pub fn relation_phase_vector(&self, r: usize) -> PhaseVector {
        PhaseVector::new(self.relation.row(r).to_vec())
    }

    /// Distance for an indexed triple.
    pub fn triple_distance(&self, h: usize, r: usize, t: usize, norm: Norm) -> f64 {
        let (hre, him) = self.entity_parts(h);
        let (tre, tim) = self.entity_parts(t);
        rotate_distance_slices(hre, him, self.relation_phases(r), tre, tim, norm)
    }

    /// Re-wrap all relation phases into `(-pi, pi]`.
    pub fn wrap_phases(&mut self) {
        for v in self.relation.as_mut_slice() {
            *v = wrap_angle(*v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn emb(re: &[f64], im: &[f64]) -> ComplexEmbedding {
        ComplexEmbedding::new(re.to_vec(), im.to_vec()).unwrap()
    }

    #[test]
    fn zero_phase_is_identity() {
        let h = emb(&[1.0, -2.0], &[0.5, 0.25]);
        let r = PhaseVector::new(vec![0.0, 0.0]);
        assert_eq!(rotate_apply(&h, &r).unwrap(), h);
    }

    #[test]
    fn quarter_turn() {
        let h = emb(&[1.0], &[0.0]);
        let r = PhaseVector::new(vec![FRAC_PI_2]);
        let out = rotate_apply(&h, &r).unwrap();
        assert!(out.re[0].abs() < 1e-15);
        assert!((out.im[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_rotation_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let d = 5;
            let h = emb(
                &(0..d).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>(),
                &(0..d).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>(),
            );
            let r = PhaseVector::new((0..d).map(|_| rng.random_range(-PI..PI)).collect());
            let out = rotate_apply(&h, &r).unwrap();
            for j in 0..d {
                // 2x2 rotation matrix (cos -sin; sin cos) applied to (re, im).
                let th = r.phases()[j];
                let ore = th.cos() * h.re[j] - th.sin() * h.im[j];
                let oim = th.sin() * h.re[j] + th.cos() * h.im[j];
                assert!((out.re[j] - ore).abs() < 1e-12);
                assert!((out.im[j] - oim).abs() < 1e-12);
                // Unit rotation preserves the modulus.
                assert!((out.modulus(j) - h.modulus(j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn score_zero_on_exact_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 6;
        let h = emb(
            &(0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>(),
            &(0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>(),
        );
        let r = PhaseVector::new((0..d).map(|_| rng.random_range(-PI..PI)).collect());
        let t = rotate_apply(&h, &r).unwrap();
        for norm in [Norm::L1, Norm::L2] {
            assert!(rotate_score(&h, &r, &t, norm).unwrap() < 1e-12);
        }
    }

    #[test]
    fn unit_offset_distance() {
        let h = emb(&[1.0], &[0.0]);
        let r = PhaseVector::new(vec![0.0]);
        let t = emb(&[0.0], &[0.0]);
        assert_eq!(rotate_score(&h, &r, &t, Norm::L1).unwrap(), 1.0);
    }

    #[test]
    fn score_matches_independent_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 4;
        let h = emb(
            &(0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>(),
            &(0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>(),
        );
        let t = emb(
            &(0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>(),
            &(0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>(),
        );
        let r = PhaseVector::new((0..d).map(|_| rng.random_range(-PI..PI)).collect());
        let s = rotate_score(&h, &r, &t, Norm::L1).unwrap();
        let mut direct = 0.0;
        for j in 0..d {
            let th = r.phases()[j];
            let vre = th.cos() * h.re[j] - th.sin() * h.im[j] - t.re[j];
            let vim = th.sin() * h.re[j] + th.cos() * h.im[j] - t.im[j];
            direct += (vre * vre + vim * vim).sqrt();
        }
        assert!((s - direct).abs() < 1e-12);
    }

    #[test]
    fn phase_vector_wraps_inputs() {
        let p = PhaseVector::new(vec![3.0 * PI, -PI]);
        assert!((p.phases()[0] - PI).abs() < 1e-12);
        assert!((p.phases()[1] - PI).abs() < 1e-12);
    }
}
