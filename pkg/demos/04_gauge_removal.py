# Which gauges could be retired?
#
# A gauge is a removal candidate when its neighbours reproduce it well. The
# greedy pass takes the best-predicted gauge, then locks its neighbours
# (they must stay, since they are its donors), and repeats.
import math

from donorgraph.inference import fit_ols_graph, predict_ols
from donorgraph.metrics import nse
from donorgraph.panel import back_transform, log_transform, split
from donorgraph.rg import removal_report, run_rg
from donorgraph.sgm import SgmConfig, run_sgm, select_graph

from _network import NAMES, simulate

splits = split(simulate(), seed=0)
result = run_sgm(splits, SgmConfig(res=10, k_min=1))

for k in (6, 11):
    g = select_graph(result, k).graph
    models = fit_ols_graph(log_transform(splits.train_panel), g)
    test = splits.test_panel
    # gauges left without neighbours get no model and a NaN column, so stay with arrays
    q_hat = back_transform(predict_ols(models, log_transform(test)).values)
    nse_by = [nse(test.values[:, j], q_hat[:, j]) if gid in models else math.nan
              for j, gid in enumerate(NAMES)]
    plan = run_rg(nse_by, g, NAMES)
    print(f"\ngraph with {g.n_edges} edges")
    for rank, gid, v in plan.ranked:
        print(f"  {rank}. remove {gid}  (test NSE {v:.3f})")
    print("  keep:", ", ".join(plan.not_removable))
    print(f"  graph score (NSE > 0.7): {removal_report(plan, 0.7):.3f}")
