//! Distributed classification of the clustered 8-feature dataset with and
//! without shared entanglement (short runs).

use dqml::circuit::CircuitConfig;
use dqml::datasets::{gen_synthetic, min_shift_separation};
use dqml::model::WeightMode;
use dqml::train::{train, QuantumClassifier, Task, TrainConfig};

fn main() -> dqml::Result<()> {
    let dataset = gen_synthetic(1);
    let (pos, neg) = dataset.label_counts();
    println!("{} samples ({pos} / {neg}), min shift separation {:.3}", dataset.samples.len(), min_shift_separation(&dataset));
    let task = Task::from_dataset(&dataset);
    let cfg = TrainConfig { iterations: 100, log_every: 25, ..Default::default() };
    for n_bell in [0, 1] {
        let circuit = CircuitConfig { n_bell, conv_depth: 4, ..Default::default() };
        let model = QuantumClassifier::new(&circuit, WeightMode::Free)?;
        let state = train(&model, &task, &cfg)?;
        for m in &state.history {
            println!("Bell-{n_bell} it {:4}: loss {:.4} train {:.3} val {:.3}", m.iteration, m.loss, m.train_acc, m.val_acc);
        }
    }
    Ok(())
}
