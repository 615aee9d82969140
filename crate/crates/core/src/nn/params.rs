/// A fixed, ordered collection of parameter arrays.
///
/// Gradient containers use the same type as the model they belong to, so
/// two values of the same architecture visit equally sized slices in the
/// same order.
pub trait Parameters {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, s| n += s.len());
        n
    }

    /// Sets every parameter to zero (used to reset gradient accumulators).
    fn fill_zero(&mut self) {
        self.visit_mut(&mut |_, s| s.fill(0.0));
    }
}

pub fn flatten(p: &impl Parameters) -> Vec<f64> {
    let mut v = Vec::with_capacity(p.num_params());
    p.visit(&mut |_, s| v.extend_from_slice(s));
    v
}

/// Writes `values` back in visiting order. Panics if the length differs.
pub fn assign_flat(p: &mut impl Parameters, values: &[f64]) {
    let mut offset = 0;
    p.visit_mut(&mut |_, s| {
        s.copy_from_slice(&values[offset..offset + s.len()]);
        offset += s.len();
    });
    assert_eq!(offset, values.len(), "parameter count mismatch");
}
