//! Small numeric helpers shared across modules.

use num_complex::Complex64;

/// Complex division robust against component-square overflow/underflow.
///
/// The naive (a b̄)/|b|² formula fails once |b| leaves [1e-154, 1e154]
/// because |b|² leaves the double range; both ends occur here (unnormalised
/// downward-recurrence values, deep-order solve denominators). Scaling b to
/// unit binade by an exact power of two restores the full exponent range.
pub(crate) fn stable_div(a: Complex64, b: Complex64) -> Complex64 {
    let m = b.re.abs().max(b.im.abs());
    if m == 0.0 || !m.is_finite() {
        return a / b;
    }
    let scale = (-m.log2().round()).exp2();
    (a * scale) / (b * scale)
}
