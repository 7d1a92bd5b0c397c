"""
Reading the bound report
========================

Every closed form at one parameter point, first as an object and then
side by side for a range of file sizes.  The concentration bound says
nothing (it exceeds 1) until F is in the thousands.
"""

from codedcaching import analysis

report = analysis.bound_report(K=8, N=16, M=4, F=400, g=3, eps=0.1)
for key, value in report.to_dict().items():
    print(f'{key:>22}  {value}')

print()
print(f"{'F':>7} {'P(|R-ER| > 0.1 ER) <=':>24}")
for F in (256, 1024, 4096, 16384, 65536):
    bound = analysis.concentration_bound_new(0.1, report.peak_rate_asymptotic, F, 8, 16, 4)
    print(f'{F:>7} {min(bound, 1.0):>24.3g}')

# Any clique cover that gets within a factor 4g/3 of the uncoded rate needs files
# at least this long:
for g in (3, 4, 5, 6):
    print(f'g={g}: F >= {analysis.filesize_lowerbound_cliquecover(g, 8, 16, 4):.1f}')
