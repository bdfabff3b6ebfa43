import sympy as sp
def oracle(N, U):
    x,y=sp.symbols('x y')
    names=['L']+[f'u{k}' for k in range(N)]+[f'v{k}' for k in range(1,N)]
    F={n:sp.Function(n)(x,y) for n in names}
    L=F['L']
    u={k:F[f'u{k}'] for k in range(N)}; u[N]=L**sp.Rational(N,2)
    v={k:F[f'v{k}'] for k in range(1,N)}; v[0]=0; v[N]=0
    def a(m):
        k=abs(m)
        if k>N: return 0
        return u[k]+sp.I*v[k] if m>=0 else u[k]-sp.I*v[k]
    al=sp.diff(L,y)/(2*L); be=sp.diff(L,x)/(2*L)
    U1,V1=u[N-1],v[N-1]
    Om=((N-1)*(sp.diff(L,y)*U1-sp.diff(L,x)*V1)+2*L*(sp.diff(V1,x)-sp.diff(U1,y)))/(4*N*L**sp.Rational(N+1,2))
    def E(k):
        am,ap,ak=a(k-1),a(k+1),a(k)
        return al*(sp.I*(k-1)*am+sp.I*(k+1)*ap)/2 - be*(sp.I*(k-1)*am-sp.I*(k+1)*ap)/(2*sp.I) + (sp.diff(am,x)+sp.diff(ap,x))/2 + (sp.diff(am,y)-sp.diff(ap,y))/(2*sp.I) - sp.I*k*Om*ak/sp.sqrt(L)
    rows=[('re',E(0))]
    for k in range(1,N):
        rows+=[('re',E(k)),('im',E(k))]
    rows.append(('re',2*L*(sp.diff(U1,x)+sp.diff(V1,y))-(N-1)*(V1*sp.diff(L,y)+U1*sp.diff(L,x))))
    # replace derivatives by symbols
    dx={n:sp.Symbol(f'{n}_x',real=True) for n in names}; dy={n:sp.Symbol(f'{n}_y',real=True) for n in names}; val={n:sp.Symbol(n,positive=True) for n in names}
    sub={}
    for n in names:
        sub[sp.Derivative(F[n],x)]=dx[n]; sub[sp.Derivative(F[n],y)]=dy[n]
    vsub={F[n]:val[n] for n in names}
    num={val[n]:sp.nsimplify(U[i]) for i,n in enumerate(names)}
    A=[];B=[]
    for part,r in rows:
        r=r.subs(sub).subs(vsub)
        r=sp.expand(r.subs(num))
        r=sp.re(r) if part=='re' else sp.im(r)
        A.append([sp.N(sp.diff(r,dx[n]),25) for n in names])
        B.append([sp.N(sp.diff(r,dy[n]),25) for n in names])
    return A,B
import sys
for N,U in [(1,[1,0.3]),(1,[1.7,-0.4]),(2,[1,0.1,0.2,0.05]),(2,[1.3,0.1,0.2,0.05])]:
    A,B=oracle(N,U)
    print(N,U)
    print('A',[[float(c) for c in r] for r in A])
    print('B',[[float(c) for c in r] for r in B])
