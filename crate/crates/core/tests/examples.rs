//! Every example runs to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run().unwrap();
        }
    };
}

example!(b_coefficients);
example!(universal_model);
example!(membership);
example!(variety_model);
example!(berezin_kernel);
example!(reproducing_kernel);
example!(beurling);
example!(characteristic_function);
example!(dilation_wold);
example!(coincidence);
