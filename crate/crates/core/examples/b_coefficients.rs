// Weights of the noncommutative domain defined by q = 2Z₁ + Z₂ + Z₁Z₂.

use ncvariety::ncalg::{b_table, enumerate_words, gamma_coefficient, PositiveRegularPolynomial};

pub fn run() -> ncvariety::Result<()> {
    let q = PositiveRegularPolynomial::from_terms(2, &[(&[0], 2.0), (&[1], 1.0), (&[0, 1], 1.0)])?;
    for m in 1..=2 {
        let table = b_table(&q, m, 3);
        println!("m = {m}");
        for (idx, w) in enumerate_words(2, 3).iter().enumerate() {
            let letters: Vec<String> = w.0.iter().map(|j| format!("Z{}", j + 1)).collect();
            println!("  b[{}] = {}", if letters.is_empty() { "1".into() } else { letters.join("") }, table[idx]);
        }
        println!("  gamma(1,1) = {}", gamma_coefficient(&q, m, &[1, 1]));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
