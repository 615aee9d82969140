use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Drop probability plus the seed of its mask stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutSpec {
    pub p: f64,
    pub rng_seed: u64,
}

/// Inverted dropout: zero each unit with probability `p`, scale survivors by
/// `1 / (1 - p)`. Returns the output and the 0/1 keep mask.
pub fn dropout_with_rng<R: Rng + ?Sized>(p: f64, x: &[f64], rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    assert!((0.0..1.0).contains(&p), "dropout probability must lie in [0, 1)");
    if p == 0.0 {
        return (x.to_vec(), vec![1.0; x.len()]);
    }
    let scale = 1.0 / (1.0 - p);
    let mask: Vec<f64> = x
        .iter()
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { 1.0 })
        .collect();
    let out = x.iter().zip(&mask).map(|(v, m)| v * m * scale).collect();
    (out, mask)
}

/// Seeded dropout. With `active == false` (plain inference) the input is
/// returned unchanged; MC-dropout sampling calls this with `active == true`.
pub fn dropout_apply(spec: &DropoutSpec, x: &[f64], active: bool) -> (Vec<f64>, Vec<f64>) {
    if !active {
        return (x.to_vec(), vec![1.0; x.len()]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    dropout_with_rng(spec.p, x, &mut rng)
}
