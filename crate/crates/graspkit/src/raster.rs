//! Binary rasters and exact pixel-set geometry.
//!
//! A [`BinaryRaster`] is the common currency for object masks, gripper masks,
//! and gripper paths. Pixels are addressed as (x, y) with x rightward and y
//! downward; the pixel at (x, y) covers the unit square [x, x+1) × [y, y+1)
//! and its center is (x + 0.5, y + 0.5). Storage is one bit per pixel so that
//! overlap counting reduces to a word-wise AND + popcount scan.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("degenerate polygon: fewer than 3 vertices or zero area")]
    DegeneratePolygon,
    #[error("raster dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("operation requires a nonempty pixel region")]
    EmptyRegion,
    #[error("sweep requires a convex polygon")]
    NonConvexSweep,
}

const EPS: f64 = 1e-9;

/// Fixed-size 2D bit grid, row-major, one bit per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryRaster {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl BinaryRaster {
    pub fn new(width: u32, height: u32) -> Self {
        let nbits = width as usize * height as usize;
        BinaryRaster {
            width,
            height,
            words: vec![0; nbits.div_ceil(64)],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    fn bit_index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        let i = self.bit_index(x, y);
        self.words[i / 64] >> (i % 64) & 1 != 0
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        let i = self.bit_index(x, y);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    /// Number of set pixels.
    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn check_dims(&self, other: &Self) -> Result<(), RasterError> {
        if self.width != other.width || self.height != other.height {
            return Err(RasterError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// popcount(self AND other) without materializing the intersection.
    pub fn overlap_count(&self, other: &Self) -> Result<u64, RasterError> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum())
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, RasterError> {
        self.check_dims(other)?;
        Ok(BinaryRaster {
            width: self.width,
            height: self.height,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        })
    }

    pub fn union_with(&mut self, other: &Self) -> Result<(), RasterError> {
        self.check_dims(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    /// True iff every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Self) -> Result<bool, RasterError> {
        self.check_dims(other)?;
        Ok(self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0))
    }

    /// Mean of set-pixel centers.
    pub fn centroid(&self) -> Result<(f64, f64), RasterError> {
        let mut n = 0u64;
        let mut sx = 0u64;
        let mut sy = 0u64;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    n += 1;
                    sx += x as u64;
                    sy += y as u64;
                }
            }
        }
        if n == 0 {
            return Err(RasterError::EmptyRegion);
        }
        Ok((sx as f64 / n as f64 + 0.5, sy as f64 / n as f64 + 0.5))
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| (x, y)))
            .filter(move |&(x, y)| self.get(x, y))
    }

    /// Rotate a square raster by +π/2 in the y-down pixel frame (the same
    /// sense as `Polygon2D::rotated_about`): (x, y) → (n−1−y, x). Exact, used
    /// for rotation-equivariance checks.
    pub fn rotated_quarter(&self) -> Self {
        assert_eq!(self.width, self.height);
        let n = self.width;
        let mut out = BinaryRaster::new(n, n);
        for y in 0..n {
            for x in 0..n {
                if self.get(x, y) {
                    out.set(n - 1 - y, x, true);
                }
            }
        }
        out
    }
}

/// Simple polygon with float vertices in pixel coordinates, CCW preferred.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon2D {
    vertices: Vec<(f64, f64)>,
}

impl Polygon2D {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self, RasterError> {
        if vertices.len() < 3 {
            return Err(RasterError::DegeneratePolygon);
        }
        let poly = Polygon2D { vertices };
        if poly.area().abs() < EPS {
            return Err(RasterError::DegeneratePolygon);
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// Signed area via the shoelace formula (positive for CCW in a y-up
    /// frame; sign is irrelevant to every caller here).
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        let mut acc = 0.0;
        for i in 0..n {
            let (x0, y0) = v[i];
            let (x1, y1) = v[(i + 1) % n];
            acc += x0 * y1 - x1 * y0;
        }
        acc / 2.0
    }

    pub fn is_convex(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let mut pos = false;
        let mut neg = false;
        for i in 0..n {
            let a = v[i];
            let b = v[(i + 1) % n];
            let c = v[(i + 2) % n];
            let cross = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
            if cross > EPS {
                pos = true;
            } else if cross < -EPS {
                neg = true;
            }
        }
        !(pos && neg)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Polygon2D {
            vertices: self.vertices.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
        }
    }

    /// Rotate every vertex by `angle` radians about `(cx, cy)`.
    pub fn rotated_about(&self, angle: f64, cx: f64, cy: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Polygon2D {
            vertices: self
                .vertices
                .iter()
                .map(|&(x, y)| {
                    let (dx, dy) = (x - cx, y - cy);
                    (cx + c * dx - s * dy, cy + s * dx + c * dy)
                })
                .collect(),
        }
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut min_x = f64::INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for &(x, y) in &self.vertices {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        (min_x, min_y, max_x, max_y)
    }

    /// Point-in-polygon, boundary inclusive. Even-odd crossing rule with an
    /// explicit on-edge check so boundary points count as inside regardless
    /// of orientation.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n {
            let (x0, y0) = v[i];
            let (x1, y1) = v[(i + 1) % n];
            let cross = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0);
            if cross.abs() < EPS
                && px >= x0.min(x1) - EPS
                && px <= x0.max(x1) + EPS
                && py >= y0.min(y1) - EPS
                && py <= y0.max(y1) + EPS
            {
                return true;
            }
        }
        let mut inside = false;
        for i in 0..n {
            let (x0, y0) = v[i];
            let (x1, y1) = v[(i + 1) % n];
            if (y0 > py) != (y1 > py) {
                let x_cross = x0 + (py - y0) / (y1 - y0) * (x1 - x0);
                if px < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Rasterize a simple polygon: pixel (x, y) is set iff its center lies inside
/// the polygon (boundary inclusive). Pixels outside the raster are clipped
/// silently; labeling crops legitimately truncate geometry.
pub fn rasterize_polygon(
    poly: &Polygon2D,
    width: u32,
    height: u32,
) -> Result<BinaryRaster, RasterError> {
    let mut out = BinaryRaster::new(width, height);
    rasterize_polygon_into(poly, &mut out);
    Ok(out)
}

/// Rasterize into an existing raster, OR-ing set pixels. Used to accumulate
/// multi-finger unions without intermediate allocations.
pub fn rasterize_polygon_into(poly: &Polygon2D, out: &mut BinaryRaster) {
    let (min_x, min_y, max_x, max_y) = poly.bbox();
    let x0 = min_x.floor().max(0.0) as i64;
    let y0 = min_y.floor().max(0.0) as i64;
    let x1 = (max_x.ceil() as i64).min(out.width() as i64 - 1);
    let y1 = (max_y.ceil() as i64).min(out.height() as i64 - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            if poly.contains(x as f64 + 0.5, y as f64 + 0.5) {
                out.set(x as u32, y as u32, true);
            }
        }
    }
}

/// Exact swept region of a convex polygon under linear translation: the
/// convex hull of the original and translated vertex sets.
pub fn sweep_convex(poly: &Polygon2D, dx: f64, dy: f64) -> Result<Polygon2D, RasterError> {
    if !poly.is_convex() {
        return Err(RasterError::NonConvexSweep);
    }
    let mut pts: Vec<(f64, f64)> = poly.vertices().to_vec();
    pts.extend(poly.vertices().iter().map(|&(x, y)| (x + dx, y + dy)));
    let hull = convex_hull(&mut pts);
    Polygon2D::new(hull)
}

/// Andrew's monotone chain; returns CCW hull (y-up convention's CW, which
/// downstream code never depends on).
fn convex_hull(pts: &mut Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts.clone();
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter() {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance from each set pixel to the nearest unset pixel or to the raster
/// border (whichever is closer), in pixel units; 0 everywhere else.
///
/// Exact brute force up to 64x64; two-pass chamfer 3-4 scaled by 1/3 above
/// that (within 8% of exact, enough for interior-ness ranking).
pub fn distance_to_boundary_map(r: &BinaryRaster) -> Vec<f64> {
    let (w, h) = (r.width() as usize, r.height() as usize);
    if w <= 64 && h <= 64 {
        distance_map_exact(r)
    } else {
        distance_map_chamfer(r)
    }
}

fn border_distance(x: usize, y: usize, w: usize, h: usize) -> f64 {
    let dx = (x + 1).min(w - x);
    let dy = (y + 1).min(h - y);
    dx.min(dy) as f64
}

fn distance_map_exact(r: &BinaryRaster) -> Vec<f64> {
    let (w, h) = (r.width() as usize, r.height() as usize);
    let unset: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| !r.get(x as u32, y as u32))
        .collect();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            if !r.get(x as u32, y as u32) {
                continue;
            }
            let mut best = border_distance(x, y, w, h).powi(2);
            for &(ux, uy) in &unset {
                let dx = ux as f64 - x as f64;
                let dy = uy as f64 - y as f64;
                let d2 = dx * dx + dy * dy;
                if d2 < best {
                    best = d2;
                }
            }
            out[y * w + x] = best.sqrt();
        }
    }
    out
}

fn distance_map_chamfer(r: &BinaryRaster) -> Vec<f64> {
    let (w, h) = (r.width() as usize, r.height() as usize);
    const INF: u32 = u32::MAX / 2;
    let mut d = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            if r.get(x as u32, y as u32) {
                // border acts as a ring of unset pixels
                d[y * w + x] = INF.min(3 * border_distance(x, y, w, h) as u32);
            }
        }
    }
    // forward pass
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if d[i] == 0 {
                continue;
            }
            let mut best = d[i];
            if x > 0 {
                best = best.min(d[i - 1] + 3);
            }
            if y > 0 {
                best = best.min(d[i - w] + 3);
                if x > 0 {
                    best = best.min(d[i - w - 1] + 4);
                }
                if x + 1 < w {
                    best = best.min(d[i - w + 1] + 4);
                }
            }
            d[i] = best;
        }
    }
    // backward pass
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let i = y * w + x;
            if d[i] == 0 {
                continue;
            }
            let mut best = d[i];
            if x + 1 < w {
                best = best.min(d[i + 1] + 3);
            }
            if y + 1 < h {
                best = best.min(d[i + w] + 3);
                if x + 1 < w {
                    best = best.min(d[i + w + 1] + 4);
                }
                if x > 0 {
                    best = best.min(d[i + w - 1] + 4);
                }
            }
            d[i] = best;
        }
    }
    d.into_iter().map(|v| v as f64 / 3.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon2D {
        Polygon2D::new(vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)]).unwrap()
    }

    fn random_raster(rng: &mut StdRng, w: u32, h: u32, fill: f64) -> BinaryRaster {
        let mut r = BinaryRaster::new(w, h);
        for y in 0..h {
            for x in 0..w {
                if rng.gen_bool(fill) {
                    r.set(x, y, true);
                }
            }
        }
        r
    }

    #[test]
    fn rasterize_unit_square() {
        let r = rasterize_polygon(&square(1.0, 1.0, 3.0, 3.0), 8, 8).unwrap();
        assert_eq!(r.count(), 4);
        for (x, y) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            assert!(r.get(x, y));
        }
    }

    #[test]
    fn rasterize_clips_out_of_bounds() {
        let r = rasterize_polygon(&square(10.0, 10.0, 12.0, 12.0), 8, 8).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn degenerate_polygon_rejected() {
        assert_eq!(
            Polygon2D::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap_err(),
            RasterError::DegeneratePolygon
        );
        // zero area
        assert_eq!(
            Polygon2D::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).unwrap_err(),
            RasterError::DegeneratePolygon
        );
    }

    // Supersampling oracle: estimate polygon area by a 4x-per-axis subgrid.
    fn supersampled_area(poly: &Polygon2D, w: u32, h: u32) -> f64 {
        let mut hits = 0u64;
        for y in 0..h * 4 {
            for x in 0..w * 4 {
                let px = (x as f64 + 0.5) / 4.0;
                let py = (y as f64 + 0.5) / 4.0;
                if poly.contains(px, py) {
                    hits += 1;
                }
            }
        }
        hits as f64 / 16.0
    }

    #[test]
    fn rasterize_area_close_to_supersampled_estimate() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            // random convex polygon: hull of random points
            let mut pts: Vec<(f64, f64)> = (0..8)
                .map(|_| (rng.gen_range(2.0..30.0), rng.gen_range(2.0..30.0)))
                .collect();
            let hull = convex_hull(&mut pts);
            if hull.len() < 3 {
                continue;
            }
            let poly = match Polygon2D::new(hull) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let r = rasterize_polygon(&poly, 32, 32).unwrap();
            let est = supersampled_area(&poly, 32, 32);
            let perimeter: f64 = {
                let v = poly.vertices();
                (0..v.len())
                    .map(|i| {
                        let a = v[i];
                        let b = v[(i + 1) % v.len()];
                        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
                    })
                    .sum()
            };
            assert!(
                (r.count() as f64 - est).abs() <= perimeter,
                "count {} vs estimate {est} (perimeter {perimeter})",
                r.count()
            );
        }
    }

    #[test]
    fn overlap_matches_naive_loop() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_raster(&mut rng, 32, 32, 0.4);
        let b = random_raster(&mut rng, 32, 32, 0.4);
        let naive: u64 = (0..32u32)
            .flat_map(|y| (0..32u32).map(move |x| (x, y)))
            .filter(|&(x, y)| a.get(x, y) && b.get(x, y))
            .count() as u64;
        assert_eq!(a.overlap_count(&b).unwrap(), naive);
        assert_eq!(a.overlap_count(&b).unwrap(), b.overlap_count(&a).unwrap());
        assert_eq!(a.overlap_count(&a).unwrap(), a.count());
    }

    #[test]
    fn overlap_dimension_mismatch() {
        let a = BinaryRaster::new(4, 4);
        let b = BinaryRaster::new(4, 5);
        assert!(matches!(
            a.overlap_count(&b),
            Err(RasterError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn intersection_identities() {
        let mut rng = StdRng::seed_from_u64(3);
        let r = random_raster(&mut rng, 16, 16, 0.5);
        let mut full = BinaryRaster::new(16, 16);
        for y in 0..16 {
            for x in 0..16 {
                full.set(x, y, true);
            }
        }
        let empty = BinaryRaster::new(16, 16);
        assert_eq!(r.intersection(&full).unwrap(), r);
        assert!(r.intersection(&empty).unwrap().is_empty());
        let other = random_raster(&mut rng, 16, 16, 0.5);
        let inter = r.intersection(&other).unwrap();
        assert_eq!(inter.count(), r.overlap_count(&other).unwrap());
        for (x, y) in inter.iter_set() {
            assert!(r.get(x, y) && other.get(x, y));
        }
    }

    #[test]
    fn centroid_conventions() {
        let mut r = BinaryRaster::new(8, 8);
        assert_eq!(r.centroid().unwrap_err(), RasterError::EmptyRegion);
        r.set(3, 5, true);
        assert_eq!(r.centroid().unwrap(), (3.5, 5.5));
        let mut full = BinaryRaster::new(10, 6);
        for y in 0..6 {
            for x in 0..10 {
                full.set(x, y, true);
            }
        }
        let (cx, cy) = full.centroid().unwrap();
        assert!((cx - 5.0).abs() < 1e-12 && (cy - 3.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_matches_naive_accumulation() {
        let mut rng = StdRng::seed_from_u64(21);
        let r = random_raster(&mut rng, 24, 24, 0.3);
        let mut n = 0.0;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for (x, y) in r.iter_set() {
            n += 1.0;
            sx += x as f64 + 0.5;
            sy += y as f64 + 0.5;
        }
        let (cx, cy) = r.centroid().unwrap();
        assert!((cx - sx / n).abs() < 1e-9);
        assert!((cy - sy / n).abs() < 1e-9);
    }

    #[test]
    fn sweep_zero_displacement_preserves_area() {
        let p = square(1.0, 1.0, 4.0, 3.0);
        let s = sweep_convex(&p, 0.0, 0.0).unwrap();
        assert!((s.area().abs() - p.area().abs()).abs() < 1e-9);
    }

    #[test]
    fn sweep_unit_square_along_x() {
        let p = square(0.0, 0.0, 1.0, 1.0);
        let s = sweep_convex(&p, 2.0, 0.0).unwrap();
        assert!((s.area().abs() - 3.0).abs() < 1e-9);
        let (x0, y0, x1, y1) = s.bbox();
        assert!((x0, y0, x1, y1) == (0.0, 0.0, 3.0, 1.0));
    }

    #[test]
    fn sweep_area_matches_shoelace_prediction() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let w = rng.gen_range(1.0..6.0);
            let h = rng.gen_range(1.0..6.0);
            let p = square(0.0, 0.0, w, h);
            let d = rng.gen_range(0.5..5.0);
            // axis-aligned rectangle swept along +x: perpendicular width is h
            let s = sweep_convex(&p, d, 0.0).unwrap();
            let expected = w * h + d * h;
            assert!((s.area().abs() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_rejects_non_convex() {
        let p = Polygon2D::new(vec![
            (0.0, 0.0),
            (4.0, 0.0),
            (4.0, 4.0),
            (2.0, 1.0),
            (0.0, 4.0),
        ])
        .unwrap();
        assert_eq!(sweep_convex(&p, 1.0, 0.0).unwrap_err(), RasterError::NonConvexSweep);
    }

    #[test]
    fn distance_map_trivial_cases() {
        let empty = BinaryRaster::new(8, 8);
        assert!(distance_to_boundary_map(&empty).iter().all(|&v| v == 0.0));
        let mut single = BinaryRaster::new(8, 8);
        single.set(4, 4, true);
        let d = distance_to_boundary_map(&single);
        assert_eq!(d[4 * 8 + 4], 1.0);
    }

    #[test]
    fn distance_map_matches_brute_force_on_block() {
        let mut r = BinaryRaster::new(32, 32);
        for y in 12..21 {
            for x in 12..21 {
                r.set(x, y, true);
            }
        }
        let d = distance_to_boundary_map(&r);
        // independent brute force
        let mut max_val = 0.0f64;
        let mut max_at = (0, 0);
        for (x, y) in r.iter_set() {
            let mut best = border_distance(x as usize, y as usize, 32, 32).powi(2);
            for uy in 0..32u32 {
                for ux in 0..32u32 {
                    if !r.get(ux, uy) {
                        let dx = ux as f64 - x as f64;
                        let dy = uy as f64 - y as f64;
                        best = best.min(dx * dx + dy * dy);
                    }
                }
            }
            let exact = best.sqrt();
            let got = d[y as usize * 32 + x as usize];
            assert!((got - exact).abs() < 1e-9);
            if exact > max_val {
                max_val = exact;
                max_at = (x, y);
            }
        }
        assert_eq!(max_at, (16, 16));
    }

    #[test]
    fn chamfer_within_8_percent_of_exact() {
        let mut rng = StdRng::seed_from_u64(17);
        let mut r = BinaryRaster::new(96, 96);
        // a couple of blobs
        for _ in 0..3 {
            let cx = rng.gen_range(20..76) as i64;
            let cy = rng.gen_range(20..76) as i64;
            let rad = rng.gen_range(6..16) as i64;
            for y in 0..96i64 {
                for x in 0..96i64 {
                    if (x - cx).pow(2) + (y - cy).pow(2) <= rad * rad {
                        r.set(x as u32, y as u32, true);
                    }
                }
            }
        }
        let approx = distance_map_chamfer(&r);
        let unset: Vec<(i64, i64)> = (0..96i64)
            .flat_map(|y| (0..96i64).map(move |x| (x, y)))
            .filter(|&(x, y)| !r.get(x as u32, y as u32))
            .collect();
        for (x, y) in r.iter_set() {
            let mut best = border_distance(x as usize, y as usize, 96, 96).powi(2);
            for &(ux, uy) in &unset {
                let dx = (ux - x as i64) as f64;
                let dy = (uy - y as i64) as f64;
                best = best.min(dx * dx + dy * dy);
            }
            let exact = best.sqrt();
            let got = approx[y as usize * 96 + x as usize];
            assert!(
                (got - exact).abs() <= 0.08 * exact + 1e-9,
                "chamfer {got} vs exact {exact} at ({x},{y})"
            );
        }
    }

    proptest::proptest! {
        #[test]
        fn intersection_count_bounded(seed in 0u64..200) {
            let mut rng = StdRng::seed_from_u64(seed);
            let a = random_raster(&mut rng, 16, 16, 0.5);
            let b = random_raster(&mut rng, 16, 16, 0.5);
            let inter = a.intersection(&b).unwrap();
            proptest::prop_assert!(inter.count() <= a.count().min(b.count()));
            proptest::prop_assert_eq!(a.overlap_count(&b).unwrap(), b.overlap_count(&a).unwrap());
        }

        #[test]
        fn rasterize_translation_equivariant(kx in -3i64..4, ky in -3i64..4, seed in 0u64..50) {
            let mut rng = StdRng::seed_from_u64(seed);
            let x0 = rng.gen_range(4.0..10.0);
            let y0 = rng.gen_range(4.0..10.0);
            let w = rng.gen_range(1.0..6.0);
            let h = rng.gen_range(1.0..6.0);
            let p = square(x0, y0, x0 + w, y0 + h);
            let base = rasterize_polygon(&p, 24, 24).unwrap();
            let shifted = rasterize_polygon(&p.translated(kx as f64, ky as f64), 24, 24).unwrap();
            for y in 0..24i64 {
                for x in 0..24i64 {
                    let (sx, sy) = (x + kx, y + ky);
                    if sx >= 0 && sx < 24 && sy >= 0 && sy < 24 {
                        proptest::prop_assert_eq!(
                            base.get(x as u32, y as u32),
                            shifted.get(sx as u32, sy as u32)
                        );
                    }
                }
            }
        }

        #[test]
        fn disjoint_union_centroid_is_weighted_mean(seed in 0u64..50) {
            let mut rng = StdRng::seed_from_u64(seed);
            // left half and right half, disjoint by construction
            let mut a = BinaryRaster::new(16, 16);
            let mut b = BinaryRaster::new(16, 16);
            for y in 0..16 {
                for x in 0..8 {
                    if rng.gen_bool(0.5) { a.set(x, y, true); }
                }
                for x in 8..16 {
                    if rng.gen_bool(0.5) { b.set(x, y, true); }
                }
            }
            proptest::prop_assume!(!a.is_empty() && !b.is_empty());
            let mut u = a.clone();
            u.union_with(&b).unwrap();
            let (ax, ay) = a.centroid().unwrap();
            let (bx, by) = b.centroid().unwrap();
            let (na, nb) = (a.count() as f64, b.count() as f64);
            let (ux, uy) = u.centroid().unwrap();
            proptest::prop_assert!((ux - (ax * na + bx * nb) / (na + nb)).abs() < 1e-9);
            proptest::prop_assert!((uy - (ay * na + by * nb) / (na + nb)).abs() < 1e-9);
        }
    }
}
