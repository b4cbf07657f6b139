//! Integer-order Bessel functions of the first kind.

/// Values `J_0(x) .. J_{n_max}(x)` by Miller's downward recurrence.
///
/// The recurrence is started well above `max(n_max, |x|)` and normalised with
/// `J_0 + 2 Σ J_{2k} = 1`, summed with compensation.
pub fn bessel_j_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = n_max.max(ax.ceil() as usize);
    let mut start = top + 30 + (10.0 * (top as f64).sqrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }

    const RESCALE: f64 = 1e250;
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k, arbitrary seed
    let mut norm = Kahan::default();
    let two_over_x = 2.0 / ax;
    for k in (1..=start).rev() {
        if k <= n_max {
            out[k] = j_cur;
        }
        if k % 2 == 0 {
            norm.add(2.0 * j_cur);
        }
        let j_prev = f64::from(k as u32) * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > RESCALE {
            j_cur /= RESCALE;
            j_next /= RESCALE;
            norm.scale(1.0 / RESCALE);
            for v in out.iter_mut() {
                *v /= RESCALE;
            }
        }
    }
    out[0] = j_cur;
    norm.add(j_cur);
    let s = norm.value();
    for v in out.iter_mut() {
        *v /= s;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_n(x)` for any integer order, using `J_{−n} = (−1)ⁿ J_n`.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_j_all(m, x)[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Table of `J_k(x)` for `k ∈ [−n_max, n_max]`, indexed by `k + n_max`.
pub fn bessel_j_symmetric(n_max: usize, x: f64) -> Vec<f64> {
    let pos = bessel_j_all(n_max, x);
    let mut out = Vec::with_capacity(2 * n_max + 1);
    for k in (1..=n_max).rev() {
        out.push(if k % 2 == 1 { -pos[k] } else { pos[k] });
    }
    out.extend_from_slice(&pos);
    out
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn scale(&mut self, s: f64) {
        self.sum *= s;
        self.comp *= s;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}
