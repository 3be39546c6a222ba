fn main() {
    let xs: Vec<f64> = (0..500).map(|i| -1.2 + 2.4 * i as f64 / 499.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (2.0*x).sin() * (-10.0*x*x).exp()).collect();
    let d = symreg::numfit::Dataset::from_xy(xs, ys).unwrap();
    let png = symreg::plotgen::render_plot(&d, &symreg::plotgen::PlotSpec::default()).unwrap();
    std::fs::write("/tmp/check.png", png).unwrap();
    println!("written");
}
