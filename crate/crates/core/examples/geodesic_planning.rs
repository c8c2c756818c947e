//! Clearance-weighted geodesics: the same wall with a narrow slot and a wide
//! opening, routed at increasing safety weights.
use flownav::edt::dto;
use flownav::geodesic::{backtrack, cost_map, geodesic, GeodesicOptions};
use flownav::grid::Raster;
use flownav::Pixel;

fn main() -> flownav::Result<()> {
    let free = Raster::from_fn(60, 40, |x, y| !(20..40).contains(&x) || y == 20 || (30..39).contains(&y));
    let clearance = dto(&free).distances;
    let (start, goal) = (Pixel::new(5, 20), Pixel::new(55, 20));
    for lambda in [0.0, 0.1, 0.2, 1.0] {
        let cost = cost_map(&clearance, 10.0, lambda)?;
        let res = geodesic(&free, &cost, &[goal], GeodesicOptions::default())?;
        let path = backtrack(&res.pred, start).expect("start is reachable");
        let route = if path.iter().any(|p| p.y >= 30) { "wide opening" } else { "narrow slot" };
        println!(
            "lambda {lambda:>4}: {route:<12} weighted cost {:8.2}, pixel length {:6.2}, {} cells",
            res.d_weighted.at(start),
            res.d_pixel.at(start),
            path.len()
        );
    }
    Ok(())
}
