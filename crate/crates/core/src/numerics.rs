//! Small numeric helpers shared across modules.

/// Correctly rounded sum of `values` (Shewchuk's partials algorithm).
///
/// Terms that are exact negatives of each other cancel exactly regardless of
/// order, which keeps gradients of symmetric targets exactly zero at their
/// centre of symmetry.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    // Non-overlapping partials; 64 suffices for any finite f64 inputs.
    let mut partials = [0.0f64; 64];
    let mut len = 0;
    let mut special = 0.0;
    for mut x in values {
        if !x.is_finite() {
            special += x;
            continue;
        }
        let mut kept = 0;
        for i in 0..len {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials[kept] = x;
        len = kept + 1;
    }
    if special != 0.0 || special.is_nan() {
        return special;
    }
    // Sum from the top, stopping once the remainder cannot change the result.
    let mut hi = 0.0;
    let mut lo = 0.0;
    while len > 0 {
        len -= 1;
        let x = hi;
        let y = partials[len];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Half-way rounding correction.
    if len > 0 && ((lo < 0.0 && partials[len - 1] < 0.0) || (lo > 0.0 && partials[len - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}
