"""Fit tanh(5x) with single-qubit re-uploading models of growing depth."""

from nisqkit.datasets import regression_grid, target_functions
from nisqkit.reupload import ReuploadModel, train, z_objective

x = regression_grid(50)
y = target_functions("tanh", x)
for layers in (1, 2, 3, 5):
    obj = z_objective(ReuploadModel("UAT", layers), x, y)
    tr = train(obj, restarts=5, seed=layers, max_evals=600)
    print(f"{layers} layer(s): chi2 = {tr.result.best_loss:.2e} after {tr.result.evaluations} evals")
