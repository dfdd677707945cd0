//! Bessel functions of the first kind for integer order.
//!
//! Values are obtained by Miller's backward recurrence, normalized with
//! `J_0 + 2 sum_k J_2k = 1`, which is stable for every order.

/// `J_0(x) ..= J_nmax(x)`.
pub fn bessel_j_table(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let reach = nmax.max(ax.ceil() as usize);
    let mut start = reach + 20 + (40.0 * reach as f64).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    let mut stash = vec![0.0; nmax + 1];
    for k in (1..=start).rev() {
        // J_{k-1} = (2k/x) J_k - J_{k+1}
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx <= nmax {
            stash[idx] = cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in stash.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += cur;
    for (k, v) in stash.into_iter().enumerate() {
        let val = v / norm;
        // J_n(-x) = (-1)^n J_n(x)
        out[k] = if x < 0.0 && k % 2 == 1 { -val } else { val };
    }
    out
}

/// `J_n(x)` for any integer order, using `J_{-n} = (-1)^n J_n`.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let k = n.unsigned_abs() as usize;
    let v = bessel_j_table(k, x)[k];
    if n < 0 && k % 2 == 1 {
        -v
    } else {
        v
    }
}
