use morphokit::hydro::fill_lake;
use morphokit::morphometry::{aspect, reclass_aspect_8, slope, AspectClass};
use morphokit::parallel::Executor;
use morphokit::raster::{ascii_grid_string, parse_ascii_grid, GridSpec, Raster, RasterKind};
use morphokit::vector_io::{GeoPoint, Geometry};
use morphokit::zonal::{histogram, rasterize_polygon, uniform_breaks, zonal_stats, ZonalInputs};
use proptest::prelude::*;

fn grid(ncols: usize, nrows: usize, cs: f64) -> GridSpec {
    GridSpec::new(ncols, nrows, 0.0, 0.0, cs).unwrap()
}

/// Values on a 1e-6 lattice with some nodata.
fn lattice_raster() -> impl Strategy<Value = Raster> {
    (1usize..12, 1usize..12).prop_flat_map(|(c, r)| {
        prop::collection::vec(prop::option::weighted(0.9, -500_000_000i64..500_000_000), c * r).prop_map(move |cells| {
            let spec = grid(c, r, 2.0);
            let values = cells.iter().map(|v| v.map_or(spec.nodata, |k| k as f64 / 1e6)).collect();
            Raster::new(spec, values, RasterKind::Continuous).unwrap()
        })
    })
}

fn same_side(p: (f64, f64), a: GeoPoint, b: GeoPoint, c: GeoPoint) -> bool {
    let cross = |u: GeoPoint, v: GeoPoint| (v.x - u.x) * (p.1 - u.y) - (v.y - u.y) * (p.0 - u.x);
    let (d1, d2, d3) = (cross(a, b), cross(b, c), cross(c, a));
    (d1 > 0.0 && d2 > 0.0 && d3 > 0.0) || (d1 < 0.0 && d2 < 0.0 && d3 < 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ascii_grid_round_trip(r in lattice_raster()) {
        let back = parse_ascii_grid(&ascii_grid_string(&r), RasterKind::Continuous).unwrap();
        prop_assert_eq!(back.spec(), r.spec());
        prop_assert!(back.values().iter().zip(r.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn histogram_counts_every_valid_cell(r in lattice_raster(), bins in 1usize..9) {
        let (lo, hi) = r.valid_values().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        prop_assume!(lo.is_finite());
        let h = histogram(&r, None, &uniform_breaks(lo, hi, bins).unwrap()).unwrap();
        prop_assert_eq!(h.total() as usize, r.valid_values().count());
        prop_assert_eq!(h.underflow + h.overflow, 0);
    }

    #[test]
    fn triangle_zone_matches_enumeration(
        pts in prop::array::uniform6(-5.0f64..69.0),
        values in prop::collection::vec(100.0f64..200.0, 64 * 64),
    ) {
        let [ax, ay, bx, by, cx, cy] = pts;
        let (a, b, c) = (GeoPoint::new(ax, ay), GeoPoint::new(bx, by), GeoPoint::new(cx, cy));
        prop_assume!(((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs() > 1.0);
        let spec = grid(64, 64, 1.0);
        let dem = Raster::new(spec, values, RasterKind::Continuous).unwrap();
        let polygon = Geometry::polygon_from_ring(vec![a, b, c]);
        let mask = rasterize_polygon(&polygon, &spec, 1).unwrap();
        let inside: Vec<f64> = (0..spec.len())
            .filter(|&i| same_side(spec.cell_center(i / 64, i % 64), a, b, c))
            .map(|i| dem.values()[i])
            .collect();
        prop_assert_eq!(mask.count(), inside.len());
        prop_assume!(!inside.is_empty());
        let inputs = ZonalInputs { dem: &dem, slope: &dem, aspect: &dem };
        let z = zonal_stats(inputs, &mask, 1, &polygon, "t").unwrap();
        let n = inside.len() as f64;
        let mean = inside.iter().sum::<f64>() / n;
        let sd = (inside.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert_eq!(z.cell_count, inside.len());
        prop_assert_eq!(z.alt_min, inside.iter().cloned().fold(f64::INFINITY, f64::min));
        prop_assert_eq!(z.alt_max, inside.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        prop_assert!((z.alt_mean - mean).abs() <= 1e-12 * mean.abs());
        prop_assert!((z.alt_stddev - sd).abs() <= 1e-9 * sd.max(1.0));
        prop_assert_eq!(z.alt_amplitude, z.alt_max - z.alt_min);
        prop_assert_eq!(z.area_ha, 100.0 * z.area_km2);
    }

    #[test]
    fn kernels_ignore_worker_count(seed in 0u64..1000, workers in 2usize..5) {
        let spec = grid(37, 23, 2.0);
        let s = seed as f64;
        let dem = Raster::from_fn(spec, RasterKind::Continuous, &Executor::sequential(), |x, y| {
            (x * 0.013 + s).sin() * 20.0 + (y * 0.021).cos() * 15.0
        }).unwrap();
        let (one, many) = (Executor::sequential(), Executor::with_workers(workers));
        prop_assert_eq!(slope(&dem, 1e-8, &one).unwrap(), slope(&dem, 1e-8, &many).unwrap());
        prop_assert_eq!(aspect(&dem, 1e-8, &one).unwrap(), aspect(&dem, 1e-8, &many).unwrap());
    }

    #[test]
    fn quarter_turn_shifts_aspect_classes_by_two(gx in -1.0f64..1.0, gy in -1.0f64..1.0) {
        prop_assume!(gx.hypot(gy) > 1e-3);
        let spec = grid(5, 5, 1.0);
        let exec = Executor::sequential();
        let plane = |gx: f64, gy: f64| Raster::from_fn(spec, RasterKind::Continuous, &exec, move |x, y| gx * x + gy * y).unwrap();
        // A clockwise quarter turn maps the gradient (gx, gy) to (gy, -gx).
        let (a, b) = (plane(gx, gy), plane(gy, -gx));
        let ca = reclass_aspect_8(&aspect(&a, 1e-8, &exec).unwrap()).unwrap();
        let cb = reclass_aspect_8(&aspect(&b, 1e-8, &exec).unwrap()).unwrap();
        let (sa, sb) = (slope(&a, 1e-8, &exec).unwrap(), slope(&b, 1e-8, &exec).unwrap());
        for i in 0..spec.len() {
            let (va, vb) = (ca.values()[i], cb.values()[i]);
            if ca.is_nodata(va) {
                prop_assert!(cb.is_nodata(vb));
                continue;
            }
            let (pa, pb) = (AspectClass::from_code(va as u8).unwrap(), AspectClass::from_code(vb as u8).unwrap());
            prop_assert_eq!((pa.code() + 1) % 8 + 1, pb.code());
            prop_assert!((sa.values()[i] - sb.values()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn lake_grows_with_pour(levels in prop::collection::vec(0.5f64..9.5, 2..8)) {
        let spec = grid(21, 21, 1.0);
        let exec = Executor::sequential();
        let dem = Raster::from_fn(spec, RasterKind::Continuous, &exec, |x, y| 0.1 * ((x - 10.5).powi(2) + (y - 10.5).powi(2))).unwrap();
        let mut sorted = levels.clone();
        sorted.sort_by(f64::total_cmp);
        let seed = GeoPoint::new(10.5, 10.5);
        let lakes: Vec<_> = sorted.iter().map(|&p| fill_lake(&dem, seed, p).unwrap()).collect();
        for w in lakes.windows(2) {
            prop_assert!(w[0].area_m2 <= w[1].area_m2);
            prop_assert!(w[0].volume_m3 <= w[1].volume_m3);
            let (m0, m1) = (w[0].mask_raster(), w[1].mask_raster());
            prop_assert!(m0.values().iter().zip(m1.values()).all(|(a, b)| m0.is_nodata(*a) || !m1.is_nodata(*b)));
        }
    }
}
