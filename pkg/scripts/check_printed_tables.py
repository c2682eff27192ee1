"""Internal-consistency check of the published metric tables.

Recomputes RMSE from each printed MSE, checks the mean-RMSE squared reading
of the cross-validation table, and flags rows with MAE > RMSE.
"""

from decimal import ROUND_HALF_UP, Decimal

from voltforecast.metrics import MetricsBundle, check_bundle, rmse_from_mse

TABLE1 = {
    "Linear regressor": (1.77, 1.33, 1.19),
    "Neural Network": (3.91, 1.97, 1.64),
    "LSTM": (39.94, 6.32, 6.18),
    "SGD": (1.24, 1.11, 9.79),
    "Random Forest": (0.54, 0.73, 0.52),
    "Decision Tree": (0.63, 0.79, 0.78),
    "KNN": (1.98, 1.40, 0.96),
}
TABLE2 = {"Linear regressor": (1.03, 1.06), "Decision Tree": (1.13, 1.27)}


def main() -> None:
    print(f"{'model':18} {'MSE':>6} {'sqrt':>9} {'rounded':>8} {'printed':>8}  issues")
    for name, (mse, rmse, mae) in TABLE1.items():
        root = rmse_from_mse(mse)
        rounded = Decimal(repr(root)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
        issues = [] if rounded == Decimal(f"{rmse:.2f}") else ["rmse mismatch"]
        issues += check_bundle(MetricsBundle(mse, rmse, mae, None), rel_tol=0.01)
        print(f"{name:18} {mse:6.2f} {root:9.5f} {rounded!s:>8} {rmse:8.2f}  {'; '.join(issues) or 'ok'}")
    print()
    for name, (rmse, mse) in TABLE2.items():
        print(f"{name:18} mean RMSE {rmse:.2f}, squared {rmse * rmse:.4f}, printed MSE {mse:.2f}, "
              f"diff {abs(rmse * rmse - mse):.4f}")


if __name__ == "__main__":
    main()
