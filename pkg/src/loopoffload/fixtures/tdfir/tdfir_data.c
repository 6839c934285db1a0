/* Input synthesis, filter design and result checking for the FIR bank. */
#include <stdio.h>
#include <math.h>
#include "tdfir.h"

extern float input_re[NUM_FILTERS][INPUT_LEN];
extern float input_im[NUM_FILTERS][INPUT_LEN];
extern float filter_re[NUM_FILTERS][FILTER_LEN];
extern float filter_im[NUM_FILTERS][FILTER_LEN];
extern float output_re[NUM_FILTERS][OUTPUT_LEN];
extern float output_im[NUM_FILTERS][OUTPUT_LEN];

double ref_re[NUM_FILTERS][OUTPUT_LEN];
double ref_im[NUM_FILTERS][OUTPUT_LEN];
float input_mean[NUM_FILTERS];

void init_inputs(void)
{
    int f, i;
    for (f = 0; f < NUM_FILTERS; f++) {
        for (i = 0; i < INPUT_LEN; i++) {
            input_re[f][i] = sin(TWO_PI * (f + 1) * i / INPUT_LEN);
            input_im[f][i] = cos(TWO_PI * (f + 2) * i / INPUT_LEN);
        }
    }
}

/* small deterministic dither on top of the tones */
void add_noise(void)
{
    int f, i;
    unsigned int state;
    for (f = 0; f < NUM_FILTERS; f++) {
        state = 12345u + f;
        i = 0;
        do {
            state = state * 1103515245u + 12345u;
            input_re[f][i] += ((state >> 16) & 255) / 65536.0f;
            i++;
        } while (i < INPUT_LEN);
    }
}

void input_statistics(void)
{
    int f, i;
    for (f = 0; f < NUM_FILTERS; f++) {
        input_mean[f] = 0.0f;
        for (i = 0; i < INPUT_LEN; i++) {
            input_mean[f] += input_re[f][i];
        }
        input_mean[f] = input_mean[f] / INPUT_LEN;
    }
}

void init_filters(void)
{
    int f, k;
    for (f = 0; f < NUM_FILTERS; f++) {
        for (k = 0; k < FILTER_LEN; k++) {
            filter_re[f][k] = 1.0f / (k + 1 + f);
            filter_im[f][k] = 0.5f / (FILTER_LEN - k + f);
        }
    }
}

void apply_window(void)
{
    int f, k;
    float w;
    for (f = 0; f < NUM_FILTERS; f++) {
        for (k = 0; k < FILTER_LEN; k++) {
            w = 0.54f - 0.46f * cos(TWO_PI * k / (FILTER_LEN - 1));
            filter_re[f][k] *= w;
            filter_im[f][k] *= w;
        }
    }
}

void normalize_filters(void)
{
    int f, k;
    float norm, scale;
    for (f = 0; f < NUM_FILTERS; f++) {
        norm = 0.0f;
        for (k = 0; k < FILTER_LEN; k++) {
            norm += filter_re[f][k] * filter_re[f][k] + filter_im[f][k] * filter_im[f][k];
        }
        scale = 1.0f / sqrt(norm);
        for (k = 0; k < FILTER_LEN; k++) {
            filter_re[f][k] *= scale;
            filter_im[f][k] *= scale;
        }
    }
}

/* straightforward double-precision convolution used as the golden result */
void reference_filter(int f)
{
    int i, k;
    for (i = 0; i < INPUT_LEN; i++) {
        for (k = 0; k < FILTER_LEN; k++) {
            ref_re[f][i + k] += (double)input_re[f][i] * filter_re[f][k] - (double)input_im[f][i] * filter_im[f][k];
            ref_im[f][i + k] += (double)input_re[f][i] * filter_im[f][k] + (double)input_im[f][i] * filter_re[f][k];
        }
    }
}

void compute_reference(void)
{
    int f, i;
    for (f = 0; f < NUM_FILTERS; f++) {
        for (i = 0; i < OUTPUT_LEN; i++) {
            ref_re[f][i] = 0.0;
            ref_im[f][i] = 0.0;
        }
    }
    for (f = 0; f < NUM_FILTERS; f++) {
        reference_filter(f);
    }
}

double compare_reference(void)
{
    int f, j;
    double err, worst = 0.0;
    for (f = 0; f < NUM_FILTERS; f++) {
        for (j = 0; j < OUTPUT_LEN; j++) {
            err = fabs(ref_re[f][j] - output_re[f][j]) + fabs(ref_im[f][j] - output_im[f][j]);
            worst = err > worst ? err : worst;
        }
    }
    return worst;
}

void dump_head(int count)
{
    int j;
    for (j = 0; j < count; j++) {
        printf("%d % .6f % .6f\n", j, output_re[0][j], output_im[0][j]);
    }
}
