//! Classical two-branch network on the same partitioned input.

use dqml::datasets::gen_synthetic;
use dqml::dnn::{dnn_param_count, DistributedDnn};
use dqml::train::{train, Task, TrainConfig};

fn main() -> dqml::Result<()> {
    let task = Task::from_dataset(&gen_synthetic(1));
    println!("parameters: {}", dnn_param_count());
    let state = train(&DistributedDnn, &task, &TrainConfig { log_every: 250, ..Default::default() })?;
    for m in &state.history {
        println!("it {:4}: loss {:.4} train {:.3} val {:.3}", m.iteration, m.loss, m.train_acc, m.val_acc);
    }
    Ok(())
}
