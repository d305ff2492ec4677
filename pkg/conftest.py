# Keeps the repository root on sys.path so tests can import the paddywatch
# package and the tool scripts (synth, features, ...) without installation.
