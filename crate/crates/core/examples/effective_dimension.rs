//! Effective dimension (Fisher rank over Haar-random inputs) as the
//! convolutional depth grows, with a reduced ensemble.

use dqml::circuit::{CircuitConfig, EmbeddingKind};
use dqml::effdim::{depth_sweep, write_sweep_csv, EDProtocolConfig};

fn main() -> dqml::Result<()> {
    let protocol = EDProtocolConfig { n_haar: 25, n_paramsets: 5, ..Default::default() };
    let mut rows = Vec::new();
    for n_bell in [0, 4] {
        let base = CircuitConfig { n_bell, embedding: EmbeddingKind::HaarRandom, ..Default::default() };
        rows.extend(depth_sweep(&base, &protocol, 4, 0)?);
    }
    write_sweep_csv(&mut std::io::stdout(), &rows)
}
