import pytest

import synthgen
from wifiplaces.dataset import load_ujiindoorloc


@pytest.fixture(scope="session")
def synth_paths(tmp_path_factory):
    """One synthetic train/test CSV pair in the official layout, built once."""
    root = tmp_path_factory.mktemp("synth")
    train = root / "train.csv"
    test = root / "test.csv"
    places = synthgen.synthetic_places()
    n_train = synthgen.write_csv(str(train), places, scans_per_place=14, seed=11)
    n_test = synthgen.write_csv(str(test), places, scans_per_place=3, seed=99)
    return {
        "train": str(train),
        "test": str(test),
        "places": places,
        "n_train": n_train,
        "n_test": n_test,
    }


@pytest.fixture(scope="session")
def synth_dataset(synth_paths):
    return load_ujiindoorloc(synth_paths["train"])
