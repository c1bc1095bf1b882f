//! Jaro string similarity over Unicode scalar values.

/// Standard Jaro similarity in `[0, 1]`.
///
/// Two characters match when equal and no further apart than
/// `max(|a|, |b|) / 2 - 1`; `t` counts matched characters that appear in a
/// different order, and the score is `(m/|a| + m/|b| + (m - t/2)/m) / 3`.
pub fn jaro_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut b_used = vec![false; b.len()];
    let mut a_matched = Vec::with_capacity(a.len());
    for (i, &ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_used[j] && b[j] == ca {
                b_used[j] = true;
                a_matched.push(ca);
                break;
            }
        }
    }
    let m = a_matched.len();
    if m == 0 {
        return 0.0;
    }
    let b_matched = b.iter().zip(&b_used).filter(|(_, &u)| u).map(|(c, _)| *c);
    let t = a_matched.iter().zip(b_matched).filter(|(x, y)| **x != *y).count();
    let m = m as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t as f64 / 2.0) / m) / 3.0
}

/// Upper bound on the Jaro similarity of strings with `len_a` and `len_b`
/// characters, used to skip candidates that cannot reach a threshold.
pub fn jaro_upper_bound(len_a: usize, len_b: usize) -> f64 {
    if len_a == 0 || len_b == 0 {
        return if len_a == len_b { 1.0 } else { 0.0 };
    }
    let (lo, hi) = (len_a.min(len_b) as f64, len_a.max(len_b) as f64);
    (2.0 + lo / hi) / 3.0
}
