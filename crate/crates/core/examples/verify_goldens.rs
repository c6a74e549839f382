//! Regenerates every tabulated shadow, compares it with the embedded
//! corpus, and triages mismatches with the substitution oracle.

use edge_shadows::goldens::{embedded_corpus, substitution_oracle, verify_corpus, Substitution};

fn main() {
    let corpus = embedded_corpus();
    let report = verify_corpus(corpus).unwrap();
    print!("{}", report.render());
    let mut inconsistent = 0;
    for (entry, outcome) in substitution_oracle(corpus) {
        if let Substitution::Violated { ode_residual, face_derivatives } = outcome {
            inconsistent += 1;
            println!(
                "inconsistent: {} {} ODE residual {ode_residual}, face derivatives [{}, {}]",
                entry.geometry, entry.key, face_derivatives[0], face_derivatives[1]
            );
        }
    }
    println!("{inconsistent} of {} entries fail their own recursion equation", corpus.len());
}
