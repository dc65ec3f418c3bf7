//! Counterfactual data augmentation: append a word-swapped copy of every
//! training example.

use crate::corpus::{Dataset, Example, GroupId, SwapLexicon};
use crate::{Error, Result};

/// Returns the originals followed by one swapped copy each, in input order.
///
/// Copies keep their class label. With `flip_group` the copy's group is
/// toggled, which needs exactly two groups.
pub fn cda_augment(train: &Dataset, lexicon: &SwapLexicon, flip_group: bool) -> Result<Dataset> {
    if flip_group && train.num_groups() != 2 {
        return Err(Error::invalid(format!(
            "flip_group needs exactly 2 groups, dataset has {}",
            train.num_groups()
        )));
    }
    let mut examples = Vec::with_capacity(2 * train.len());
    examples.extend(train.examples.iter().cloned());
    examples.extend(train.examples.iter().map(|ex| Example {
        tokens: lexicon.swap_tokens(&ex.tokens),
        class_label: ex.class_label,
        group: if flip_group {
            GroupId(1 - ex.group.0)
        } else {
            ex.group
        },
    }));
    Ok(Dataset {
        examples,
        class_names: train.class_names.clone(),
        group_names: train.group_names.clone(),
    })
}
