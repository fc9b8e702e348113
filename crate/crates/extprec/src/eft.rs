//! Error-free transformations and nonoverlapping floating-point expansions.
//!
//! An expansion is a sequence of `f64` components ordered by increasing
//! magnitude whose exact sum is the represented value. The routines here are
//! exact (no rounding) as long as no overflow occurs.

#[inline(always)]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Requires `|a| >= |b|` or `a == 0`.
#[inline(always)]
pub fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline(always)]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

const CAP: usize = 64;

/// Fixed-capacity expansion kept on the stack.
#[derive(Clone, Copy)]
pub struct Expansion {
    buf: [f64; CAP],
    len: usize,
}

impl Default for Expansion {
    fn default() -> Self {
        Self::new()
    }
}

impl Expansion {
    pub fn new() -> Self {
        Expansion {
            buf: [0.0; CAP],
            len: 0,
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.buf[..self.len]
    }

    /// Adds `b` exactly, eliminating zero components.
    pub fn grow(&mut self, b: f64) {
        if b == 0.0 {
            return;
        }
        let mut q = b;
        let mut out = 0usize;
        for i in 0..self.len {
            let (s, e) = two_sum(q, self.buf[i]);
            q = s;
            if e != 0.0 {
                self.buf[out] = e;
                out += 1;
            }
        }
        if q != 0.0 || out == 0 {
            self.buf[out] = q;
            out += 1;
        }
        // Overflow of the capacity would require a dynamic range far beyond
        // anything a 4-component value can produce.
        assert!(out < CAP, "expansion capacity exceeded");
        self.len = out;
    }

    /// Leading `N` components of the compressed expansion, largest first.
    /// Components below the `N`-th are folded into the last one.
    pub fn top<const N: usize>(&self) -> [f64; N] {
        let mut out = [0.0; N];
        if self.len == 0 {
            return out;
        }
        let h = compress(self.components());
        let m = h.len;
        for (k, slot) in out.iter_mut().enumerate() {
            if k < m {
                *slot = h.buf[m - 1 - k];
            }
        }
        if m > N {
            let rest: f64 = h.buf[..m - N].iter().sum();
            out[N - 1] += rest;
        }
        out
    }
}

fn compress(e: &[f64]) -> Expansion {
    let m = e.len();
    let mut g = [0.0f64; CAP];
    let mut bottom = m - 1;
    let mut q = e[m - 1];
    for i in (0..m - 1).rev() {
        let (qn, small) = fast_two_sum(q, e[i]);
        if small != 0.0 {
            g[bottom] = qn;
            bottom -= 1;
            q = small;
        } else {
            q = qn;
        }
    }
    let mut h = Expansion::new();
    for &gi in &g[bottom + 1..m] {
        let (qn, small) = fast_two_sum(gi, q);
        if small != 0.0 {
            h.buf[h.len] = small;
            h.len += 1;
        }
        q = qn;
    }
    h.buf[h.len] = q;
    h.len += 1;
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_is_exact() {
        let (s, e) = two_sum(1.0, 1e-20);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-20);
    }

    #[test]
    fn expansion_cancels_exactly() {
        let mut x = Expansion::new();
        for v in [1.0, 1e-17, -1.0, 3e-40, -1e-17] {
            x.grow(v);
        }
        let t: [f64; 4] = x.top();
        assert_eq!(t, [3e-40, 0.0, 0.0, 0.0]);
    }
}
