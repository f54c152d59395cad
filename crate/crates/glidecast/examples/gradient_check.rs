//! Verify the hand-derived backpropagation against central finite
//! differences on a small model.
//!
//! The analytic gradient of the scalar output with respect to a sampled
//! parameter element is compared to `(f(w + h) - f(w - h)) / 2h`. With
//! correct gradients the two agree to roughly square-root machine
//! precision; a derivation mistake shows up as an O(1) relative error.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use glidecast::dataset::Axis;
use glidecast::model::{build_model, model_backward, model_forward};
use glidecast::nn::ops::Mode;
use glidecast::nn::{RngStream, Tensor};

fn main() -> glidecast::Result<()> {
    let mut rng = RngStream::new(7);
    let mut model = build_model(5, Axis::Z, &mut rng)?;
    let mut window = Tensor::zeros(&[5, 3]);
    for v in window.data_mut() {
        *v = rng.uniform(0.0, 1.0);
    }

    // Analytic gradients in evaluation mode (no dropout, so the forward
    // pass is a deterministic function of the parameters alone).
    model.zero_grads();
    let (prediction, tape) = model_forward(&model, &window, Mode::Eval, &mut RngStream::new(0))?;
    model_backward(&mut model, &tape, 1.0)?;
    println!("forward output: {prediction:.6}\n");

    println!(
        "{:<22} {:>7} {:>14} {:>14} {:>10}",
        "tensor", "element", "analytic", "numeric", "rel err"
    );
    let mut worst = 0.0_f64;
    let slots = model.named_parameters().len();
    for slot in 0..slots {
        let len = model.named_parameters()[slot].1.value.len();
        let idx = (len / 2).max(1) - 1; // a representative middle element
        let analytic = model.named_parameters()[slot].1.grad.data()[idx];

        let original = model.named_parameters()[slot].1.value.data()[idx];
        let h = 1e-6 * (original.abs() + 1.0);
        let probe = |value: f64, m: &mut glidecast::model::HybridModel| -> glidecast::Result<f64> {
            m.named_parameters_mut()[slot].1.value.data_mut()[idx] = value;
            Ok(model_forward(m, &window, Mode::Eval, &mut RngStream::new(0))?.0)
        };
        let plus = probe(original + h, &mut model)?;
        let minus = probe(original - h, &mut model)?;
        model.named_parameters_mut()[slot].1.value.data_mut()[idx] = original;

        let numeric = (plus - minus) / (2.0 * h);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
        let name = model.named_parameters()[slot].0.clone();
        println!("{name:<22} {idx:>7} {analytic:>14.6e} {numeric:>14.6e} {rel:>10.2e}");
    }
    println!("\nworst relative error: {worst:.2e}");
    Ok(())
}
