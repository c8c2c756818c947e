//! Exact Euclidean distance transforms on a small hand-drawn mask.
use flownav::edt::{dtf, dto};
use flownav::grid::Raster;

const ROWS: [&str; 7] = [
    "..........",
    "..........",
    "...####...",
    "...####...",
    "..........",
    "#.........",
    "..........",
];

fn main() {
    let free = Raster::from_fn(10, 7, |x, y| ROWS[y].as_bytes()[x] == b'.');
    let to_obstacle = dto(&free);
    let to_free = dtf(&free.negated());
    println!("distance to nearest obstacle (free pixels):");
    for y in 0..7 {
        let row: Vec<String> = (0..10).map(|x| format!("{:5.2}", to_obstacle.distances.get(x, y))).collect();
        println!("{}", row.join(" "));
    }
    println!("distance to nearest free pixel (obstacle pixels):");
    for y in 0..7 {
        let row: Vec<String> = (0..10).map(|x| format!("{:5.2}", to_free.distances.get(x, y))).collect();
        println!("{}", row.join(" "));
    }
}
