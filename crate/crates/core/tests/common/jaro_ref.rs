//! Textbook Jaro: matches within `max(|a|,|b|)/2 - 1`, `t` = matched
//! characters out of order, `sim = (m/|a| + m/|b| + (m - t/2)/m) / 3`.

/// Number of characters out of order among the matches, as in `strsim`,
/// which then halves it with integer division.
pub fn jaro_parts(a: &str, b: &str) -> (usize, usize) {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut taken = vec![false; b.len()];
    let mut a_matched = Vec::new();
    for (i, ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        if let Some(j) = (lo..hi).find(|&j| !taken[j] && b[j] == *ca) {
            taken[j] = true;
            a_matched.push(*ca);
        }
    }
    let b_matched = b.iter().zip(&taken).filter(|(_, t)| **t).map(|(c, _)| *c);
    let out_of_order = a_matched.iter().zip(b_matched).filter(|(x, y)| **x != *y).count();
    (a_matched.len(), out_of_order)
}

pub fn jaro(a: &str, b: &str) -> f64 {
    let (la, lb) = (a.chars().count(), b.chars().count());
    if la == 0 && lb == 0 {
        return 1.0;
    }
    let (m, t) = jaro_parts(a, b);
    if m == 0 {
        return 0.0;
    }
    let m = m as f64;
    (m / la as f64 + m / lb as f64 + (m - t as f64 / 2.0) / m) / 3.0
}
