//! Parsing of cell literals shared by kind detection, the encoder and
//! cell/object matching.

/// A calendar date as read from a cell. Month and day are zero when the
/// source text only carried a year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellDate {
    pub year: i32,
    pub month: u32,
    pub day: u32,
}

/// Parses a decimal number. Non-finite spellings (`inf`, `NaN`) are rejected.
pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() || !t.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    let value: f64 = t.parse().ok()?;
    value.is_finite().then_some(value)
}

fn all_digits(s: &str, len: usize) -> bool {
    s.len() == len && s.bytes().all(|b| b.is_ascii_digit())
}

fn valid(month: u32, day: u32) -> bool {
    (1..=12).contains(&month) && (1..=31).contains(&day)
}

/// Parses `YYYY-MM-DD`, `DD/MM/YYYY` or a bare `YYYY`.
pub fn parse_date(text: &str) -> Option<CellDate> {
    let t = text.trim();
    if all_digits(t, 4) {
        return Some(CellDate {
            year: t.parse().ok()?,
            month: 0,
            day: 0,
        });
    }
    let iso: Vec<&str> = t.split('-').collect();
    if iso.len() == 3 && all_digits(iso[0], 4) && all_digits(iso[1], 2) && all_digits(iso[2], 2) {
        let (month, day) = (iso[1].parse().ok()?, iso[2].parse().ok()?);
        return valid(month, day).then(|| CellDate {
            year: iso[0].parse().unwrap_or_default(),
            month,
            day,
        });
    }
    let dmy: Vec<&str> = t.split('/').collect();
    if dmy.len() == 3 && all_digits(dmy[0], 2) && all_digits(dmy[1], 2) && all_digits(dmy[2], 4) {
        let (day, month) = (dmy[0].parse().ok()?, dmy[1].parse().ok()?);
        return valid(month, day).then(|| CellDate {
            year: dmy[2].parse().unwrap_or_default(),
            month,
            day,
        });
    }
    None
}

/// Year carried by a KB date literal (`1997-05-12`, `1997-05-12T00:00:00Z`,
/// `1997`, `-0044-03-15`).
pub fn literal_year(text: &str) -> Option<i32> {
    let t = text.trim();
    let (sign, rest) = match t.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, t),
    };
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.len() < 4 {
        return None;
    }
    digits.parse::<i32>().ok().map(|y| sign * y)
}

/// Year a table cell refers to, for comparison against KB date objects.
pub fn cell_year(text: &str) -> Option<i32> {
    if let Some(date) = parse_date(text) {
        return Some(date.year);
    }
    let t = text.trim();
    let n: i64 = t.parse().ok()?;
    i32::try_from(n).ok()
}

/// Lowercases, turns punctuation into separators and collapses whitespace.
/// `"Apple Inc."` becomes `"apple inc"`.
pub fn normalize_label(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}
