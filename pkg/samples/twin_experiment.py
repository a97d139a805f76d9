"""
Пример эксперимента с двумя решениями: перебор радиуса усечения K_cut.
Для таблиц результатов необходимо установить pandas `pip install nsdetermine[pandas]`.
"""
import logging
from pathlib import Path

from nsdetermine import ExperimentConfig, Session, certify_projection
from nsdetermine.experiments import cutoff_sweep


def sample_twin(path):
    config = ExperimentConfig.from_file(path)

    print('\n\n\n== Certificate (C1, gamma) ===')
    with Session(out_dir='results', seed=config.seed) as collector:
        certificate = certify_projection(config, collector)
    print(certificate.c1, certificate.gamma)

    # режим slaving: R_N v := R_N u после каждого шага
    reports = cutoff_sweep(config, [1, 2, 3])
    for k_cut, report in reports.items():
        print(f'\n\n\n== K_cut = {k_cut}, N = {report.n_functionals}, n_bound = {report.n_bound} ===')
        print(report.verdict.value, report.trailing_diff)
        print(report.frame().tail())


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO)
    sample_twin(Path(__file__).with_name('kolmogorov.toml'))
