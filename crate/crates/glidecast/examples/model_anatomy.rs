//! Inspect the hybrid forecasting network: every named tensor, its
//! shape, and where the 187,009 parameters per axis live.
//!
//! The model feeds one window of 3-channel positions through three
//! parallel branches — a 1-D convolution, an LSTM over all timesteps,
//! and a GRU reduced to its final state — then concatenates the branch
//! outputs into a two-layer dense head that emits the next coordinate
//! for its axis.
//!
//! ```text
//! cargo run --example model_anatomy
//! ```

use glidecast::dataset::Axis;
use glidecast::model::build_model;
use glidecast::nn::RngStream;

fn main() -> glidecast::Result<()> {
    let sequence_length = 10;
    let mut rng = RngStream::new(42);
    let model = build_model(sequence_length, Axis::X, &mut rng)?;

    println!(
        "hybrid model for axis {} at window length {sequence_length}\n",
        model.axis
    );
    println!("{:<22} {:>14} {:>10}", "tensor", "shape", "params");
    let mut total = 0usize;
    let mut branch_totals: Vec<(&str, usize)> =
        vec![("conv", 0), ("lstm", 0), ("gru", 0), ("head", 0)];
    for (name, p) in model.named_parameters() {
        let shape = format!("{:?}", p.value.shape());
        println!("{name:<22} {shape:>14} {:>10}", p.value.len());
        total += p.value.len();
        for (prefix, subtotal) in branch_totals.iter_mut() {
            if name.starts_with(*prefix) {
                *subtotal += p.value.len();
            }
        }
    }
    println!("{:<22} {:>14} {:>10}", "total", "", total);

    println!("\nby branch:");
    for (prefix, subtotal) in &branch_totals {
        println!(
            "  {prefix:<5} {subtotal:>9} ({:.1} %)",
            100.0 * *subtotal as f64 / total as f64
        );
    }
    println!(
        "\nthe dense head dominates because the concatenated feature vector \
         has 64 x (2 x {sequence_length} - 1) = {} entries",
        64 * (2 * sequence_length - 1)
    );
    Ok(())
}
