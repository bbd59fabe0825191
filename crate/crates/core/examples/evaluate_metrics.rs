//! Accuracy, sensitivity and specificity from a confusion matrix.

use nbad::metrics::{accuracy_exact, macro_sens_spec_exact, ConfusionMatrix, EvalReport};

fn main() -> nbad::Result<()> {
    let cm = ConfusionMatrix::from_rows(&[
        vec![9, 1, 0, 0, 0],
        vec![0, 8, 2, 0, 0],
        vec![0, 1, 9, 0, 0],
        vec![0, 0, 0, 10, 0],
        vec![1, 0, 0, 0, 9],
    ])?;
    let (sens, spec) = macro_sens_spec_exact(&cm)?;
    println!("accuracy {}", accuracy_exact(&cm)?);
    println!("sensitivity {sens}, specificity {spec}");
    for c in 0..cm.classes() {
        let (s, p) = cm.class_rates(c);
        let show = |r: Option<_>| r.map_or("undefined".to_string(), |r: nbad::metrics::Rational| r.to_string());
        println!("class {c}: sensitivity {}, specificity {}", show(s), show(p));
    }
    print!("{}", EvalReport::from_confusion(&cm)?.to_json());
    Ok(())
}
