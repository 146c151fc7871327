use rand::seq::index;
use rand::Rng as _;

use super::TimeSeriesDataset;
use crate::autodiff::Tensor;
use crate::error::{arg_err, Result};
use crate::rng::Rng;

/// Draw a minibatch without replacement.
///
/// With `conditional`, each slot first draws a class uniformly (over classes
/// present in the data) and then a sample of that class; within a class the
/// draw is without replacement while the class has enough members.
pub fn sample_batch(
    data: &TimeSeriesDataset,
    batch_size: usize,
    rng: &mut Rng,
    conditional: bool,
) -> Result<(Tensor, Vec<usize>)> {
    if batch_size == 0 || batch_size > data.len() {
        return arg_err(format!("batch size {batch_size} not in 1..={}", data.len()));
    }
    let picks: Vec<usize> = if conditional {
        let classes: Vec<Vec<usize>> = data.class_indices().into_iter().filter(|c| !c.is_empty()).collect();
        let slots: Vec<usize> = (0..batch_size).map(|_| rng.random_range(0..classes.len())).collect();
        let mut per_class = vec![Vec::new(); classes.len()];
        for (slot, &c) in slots.iter().enumerate() {
            per_class[c].push(slot);
        }
        let mut picks = vec![0; batch_size];
        for (c, slots) in per_class.iter().enumerate() {
            let members = &classes[c];
            let take = slots.len().min(members.len());
            let chosen = index::sample(rng, members.len(), take).into_vec();
            for (j, &slot) in slots.iter().enumerate() {
                picks[slot] = if j < take { members[chosen[j]] } else { members[rng.random_range(0..members.len())] };
            }
        }
        picks
    } else {
        index::sample(rng, data.len(), batch_size).into_vec()
    };
    let samples = data.samples().select(&picks)?;
    let labels = picks.iter().map(|&i| data.labels()[i]).collect();
    Ok((samples, labels))
}
