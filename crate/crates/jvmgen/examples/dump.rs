use jvmgen::corpus;
use std::path::Path;

fn main() {
    let root = std::env::args().nth(1).expect("out dir");
    let mut units = corpus::parser_corpus();
    units.extend(corpus::seeded());
    for u in &mut units {
        for c in &mut u.classes {
            c.bytes[7] = 50;
        }
    }
    corpus::write_tree(Path::new(&root), &units, true, true).unwrap();
    for u in &units {
        for c in &u.classes {
            println!("{}", c.fqn());
        }
    }
}
