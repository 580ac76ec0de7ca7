use crate::scalar::Scalar;

/// Values `h_0(t), ..., h_{n_max}(t)` of the normalized Hermite functions.
///
/// Runs the orthonormal three-term recurrence
/// `h_{n+1} = sqrt(2/(n+1)) t h_n - sqrt(n/(n+1)) h_{n-1}` on the polynomial
/// part only and applies `pi^{-1/4} exp(-t^2/2)` at the end. The polynomial
/// part is rescaled whenever it grows past `sqrt(MAX)`, with the accumulated
/// exponent folded into the final Gaussian factor, so neither `2^n n!` nor
/// `exp(t^2/2)` is ever formed. Values that underflow come out as zero.
pub fn hermite_table<T: Scalar>(t: T, n_max: usize) -> Vec<T> {
    let big = T::max_value().sqrt();
    let log_big = big.ln();
    let two = T::lit(2.0);

    let mut poly = Vec::with_capacity(n_max + 1);
    let mut log_scale = Vec::with_capacity(n_max + 1);
    let mut prev = T::zero();
    let mut cur = T::one();
    let mut log = T::zero();
    poly.push(cur);
    log_scale.push(log);
    for n in 0..n_max {
        let nf = T::from_count(n);
        let next = (two / (nf + T::one())).sqrt() * t * cur - (nf / (nf + T::one())).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > big {
            cur /= big;
            prev /= big;
            log += log_big;
        }
        poly.push(cur);
        log_scale.push(log);
    }

    let norm = T::PI().powf(T::lit(-0.25));
    let half_sq = t * t / two;
    poly.iter()
        .zip(&log_scale)
        .map(|(&v, &ls)| {
            if v == T::zero() {
                T::zero()
            } else {
                v * (ls - half_sq).exp() * norm
            }
        })
        .collect()
}

/// Single 1-d Hermite function `h_n(t)`.
pub fn hermite_1d<T: Scalar>(n: usize, t: T) -> T {
    hermite_table(t, n)[n]
}

/// Tensor-product Hermite function `h_k(y) = prod_i h_{k_i}(y_i)`.
pub fn hermite_eval<T: Scalar>(k: &[usize], y: &[T]) -> T {
    assert_eq!(k.len(), y.len(), "index and point dimensions differ");
    k.iter()
        .zip(y)
        .map(|(&ki, &yi)| hermite_1d(ki, yi))
        .fold(T::one(), |acc, v| acc * v)
}
