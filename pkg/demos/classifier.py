"""Train a one-qubit classifier on the circle problem with the weighted fidelity cost."""

from nisqkit.datasets import LabelSet, make_dataset
from nisqkit.reupload import ReuploadModel, accuracy, train, weighted_objective

ds = make_dataset("circle", 200, 4000, seed=0)
labels = LabelSet.for_classes(2)
for layers in (1, 2, 3):
    obj = weighted_objective(ReuploadModel("CLASSIFIER_U3", layers, data_dim=2), ds.train, labels)
    tr = train(obj, restarts=5, seed=0, max_evals=500)
    acc = accuracy(tr.model, labels, ds.test, weights=tr.extra)
    print(f"{layers} layer(s): test accuracy {acc:.3f}")
