//! Half-open time intervals `[start, end)` in hours and operations on sorted,
//! pairwise disjoint lists of them.

pub type Interval = (f64, f64);

/// Intersection of two intervals, if nonempty.
pub fn intersect(a: Interval, b: Interval) -> Option<Interval> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (hi > lo).then_some((lo, hi))
}

/// Parts of `[lo, hi)` not covered by any of the sorted disjoint `covered` intervals.
pub fn complement(covered: &[Interval], lo: f64, hi: f64) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut cursor = lo;
    for &(s, e) in covered {
        if e <= cursor {
            continue;
        }
        if s >= hi {
            break;
        }
        if s > cursor {
            out.push((cursor, s.min(hi)));
        }
        cursor = cursor.max(e);
        if cursor >= hi {
            break;
        }
    }
    if cursor < hi {
        out.push((cursor, hi));
    }
    out
}

/// Intersection of two sorted disjoint lists.
pub fn intersect_all(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        if let Some(x) = intersect(a[i], b[j]) {
            out.push(x);
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// `a` minus the union of the sorted disjoint `holes`.
pub fn subtract(a: Interval, holes: &[Interval]) -> Vec<Interval> {
    complement(holes, a.0, a.1)
}

/// Sorts and merges overlapping or touching intervals in place.
pub fn normalize(list: &mut Vec<Interval>) {
    list.retain(|(s, e)| e > s);
    list.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<Interval> = Vec::with_capacity(list.len());
    for &(s, e) in list.iter() {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    *list = merged;
}

/// Whether `t` lies in one of the sorted disjoint intervals.
pub fn covers(list: &[Interval], t: f64) -> bool {
    let idx = list.partition_point(|iv| iv.1 <= t);
    idx < list.len() && list[idx].0 <= t
}
