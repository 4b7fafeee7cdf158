use rand::Rng;

/// Largest mean drawn in a single Knuth product loop; `exp(-500)` is still a
/// normal `f64`.
const CHUNK: f64 = 500.0;

/// Draws a Poisson(`lambda`) variate with Knuth's multiplication method.
///
/// Means above [`CHUNK`] are split into a sum of independent smaller draws,
/// which is again Poisson with the summed mean. Every uniform comes from
/// `rng`, so a seeded generator gives a reproducible sequence.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u32 {
    assert!(lambda > 0.0 && lambda.is_finite(), "poisson mean must be positive, got {lambda}");
    let mut remaining = lambda;
    let mut total = 0u32;
    while remaining > 0.0 {
        let part = remaining.min(CHUNK);
        remaining -= part;
        total += knuth(part, rng);
    }
    total
}

fn knuth<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u32 {
    let limit = (-lambda).exp();
    let mut k = 0u32;
    let mut product: f64 = rng.gen();
    while product > limit {
        k += 1;
        product *= rng.gen::<f64>();
    }
    k
}
