/// Mean computed around the first element. Exact for constant input, and
/// loses less precision than a plain sum when values share a large offset.
pub fn stable_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut iter = values.into_iter();
    let Some(first) = iter.next() else {
        return f64::NAN;
    };
    let mut n = 1usize;
    let mut acc = 0.0;
    for v in iter {
        acc += v - first;
        n += 1;
    }
    first + acc / n as f64
}
