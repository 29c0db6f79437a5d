macro_rules! example_test {
    ($module:ident, $file:literal, $test:ident) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example_test!(synth_signals, "synth_signals.rs", synth_signals_runs);
example_test!(
    spectrogram_zeros,
    "spectrogram_zeros.rs",
    spectrogram_zeros_runs
);
example_test!(noise_histogram, "noise_histogram.rs", noise_histogram_runs);
example_test!(classify_zeros, "classify_zeros.rs", classify_zeros_runs);
example_test!(denoise, "denoise.rs", denoise_runs);
example_test!(detect_chirp, "detect_chirp.rs", detect_chirp_runs);
example_test!(accuracy_sweep, "accuracy_sweep.rs", accuracy_sweep_runs);
example_test!(file_formats, "file_formats.rs", file_formats_runs);
