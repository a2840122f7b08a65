/* Constrained-sum program one as an external executable.
 *
 * Reads one wire line "R:<x>,R:<y>" from stdin and writes the canonical
 * rendering of the result to stdout: "R:<sum>" or an error value
 * "E(T<n>:<kind>,T<n>:<message>)", exit status 0 either way.
 */
#include <math.h>
#include <stdio.h>
#include <string.h>

static int error(const char *kind, const char *msg)
{
    printf("E(T%zu:%s,T%zu:%s)\n", strlen(kind), kind, strlen(msg), msg);
    return 0;
}

int main(void)
{
    char line[256];
    double x, y;
    if (!fgets(line, sizeof line, stdin) || sscanf(line, "R:%lf,R:%lf", &x, &y) != 2) {
        fprintf(stderr, "expected R:<x>,R:<y>\n");
        return 2;
    }
    if (x < 0) return error("InvalidInput", "x must be non-negative");
    if (y < 0) return error("InvalidInput", "y must be non-negative");
    if (x >= 6) return error("InvalidInput", "x must be less than 6");
    if (y >= 6) return error("InvalidInput", "y must be less than 6");
    double s = x + y;
    if (s >= 6) return error("InvalidOutput", "sum must be less than 6");
    /* round half up to one decimal; k / 10 prints exactly with one decimal */
    printf("R:%.1f\n", floor(s * 10.0 + 0.5) / 10.0);
    return 0;
}
