//! Macro-averaged relation classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::schema::RelationSchema;
use crate::tagger::Prf;

/// Per-class scores and their unweighted macro average.
///
/// The class set is the schema's substantive relations, plus "Other" when
/// `include_other` is set; classes absent from the data count with zero
/// scores, matching the fixed-task-class-set convention.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacroScores {
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_class: Vec<(String, Prf)>,
}

pub fn macro_f1(
    gold: &[usize],
    predicted: &[usize],
    schema: &RelationSchema,
    include_other: bool,
) -> Result<MacroScores> {
    if gold.len() != predicted.len() {
        return Err(Error::shape(
            format!("{} gold labels", gold.len()),
            format!("{}", predicted.len()),
        ));
    }
    let n_classes = schema.class_count();
    for &y in gold.iter().chain(predicted.iter()) {
        if y >= n_classes {
            return Err(Error::invalid(format!("label {y} out of range ({n_classes} classes)")));
        }
    }
    let classes: Vec<usize> = (0..n_classes)
        .filter(|&c| include_other || c != schema.other_index())
        .collect();
    let mut per_class = Vec::with_capacity(classes.len());
    let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
    for &c in &classes {
        let tp = gold
            .iter()
            .zip(predicted.iter())
            .filter(|(&g, &p)| g == c && p == c)
            .count();
        let pred_n = predicted.iter().filter(|&&p| p == c).count();
        let gold_n = gold.iter().filter(|&&g| g == c).count();
        let prf = Prf::from_counts(tp, pred_n, gold_n);
        sp += prf.precision;
        sr += prf.recall;
        sf += prf.f1;
        per_class.push((schema.class_name(c).to_string(), prf));
    }
    let k = classes.len().max(1) as f64;
    Ok(MacroScores {
        macro_precision: sp / k,
        macro_recall: sr / k,
        macro_f1: sf / k,
        per_class,
    })
}
