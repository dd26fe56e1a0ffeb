//! Every shipped example must run to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().unwrap();
            }
        }
    };
}

example!(iid_capacity);
example!(ergodic_capacity);
example!(entropy_rate);
example!(finite_n_identities);
example!(decoders);
example!(phase_transition);
example!(exact_error);
