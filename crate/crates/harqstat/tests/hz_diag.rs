use harqstat::channel::SeededRng;
use harqstat::mvntest::henze_zirkler;
use harqstat::numerics::RealMatrix;

#[test]
#[ignore]
fn hz_null_moments() {
    let (d, n) = (4usize, 5000usize);
    let runs = 300;
    let mut stats = Vec::new();
    let mut rej = 0;
    for r in 0..runs {
        let mut rng = SeededRng::new(990_000 + r as u64, 0);
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.standard_normal()).collect())
            .collect();
        let x = RealMatrix::from_columns(&cols).unwrap();
        let rep = henze_zirkler(&x, 0.05).unwrap();
        stats.push(rep.statistic);
        if rep.p_value < 0.05 { rej += 1; }
    }
    let mean = stats.iter().sum::<f64>() / runs as f64;
    let var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (runs - 1) as f64;
    // Theoretical moments for d=4 and the b(n) used.
    let df = d as f64;
    let nf = n as f64;
    let b = (1.0 / 2.0f64.sqrt()) * ((2.0 * df + 1.0) * nf / 4.0).powf(1.0 / (df + 4.0));
    let b2 = b * b;
    let a = 1.0 + 2.0 * b2;
    let w = (1.0 + b2) * (1.0 + 3.0 * b2);
    let b4 = b2 * b2;
    let b8 = b4 * b4;
    let mu = 1.0 - a.powf(-df / 2.0) * (1.0 + df * b2 / a + df * (df + 2.0) * b4 / (2.0 * a * a));
    let si2 = 2.0 * (1.0 + 4.0 * b2).powf(-df / 2.0)
        + 2.0 * a.powf(-df) * (1.0 + 2.0 * df * b4 / (a * a) + 3.0 * df * (df + 2.0) * b8 / (4.0 * a.powi(4)))
        - 4.0 * w.powf(-df / 2.0) * (1.0 + 3.0 * df * b4 / (2.0 * w) + df * (df + 2.0) * b8 / (2.0 * w * w));
    eprintln!("b = {b:.4}");
    eprintln!("empirical mean {mean:.5}  vs approx mu  {mu:.5}");
    eprintln!("empirical var  {var:.6} vs approx si2 {si2:.6}");
    eprintln!("rejection rate at 0.05: {}", rej as f64 / runs as f64);
}
